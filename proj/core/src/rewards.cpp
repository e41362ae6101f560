#include "ergostop/rewards.hpp"

#include <cmath>

#include "ergostop/errors.hpp"

namespace ergostop {

double RewardSpec::drift() const {
    if (!mu_f) fail(ErrorCode::NotIrreducible, "mu(f) is undefined without a unique stationary law");
    return *mu_f;
}

RewardSpec make_rewards(const MarkovModel& model, Vector f, Vector g) {
    model.check_dimension(static_cast<std::size_t>(f.size()), "f");
    model.check_dimension(static_cast<std::size_t>(g.size()), "g");
    if (!f.allFinite() || !g.allFinite())
        fail(ErrorCode::InvalidArgument, "rewards must be finite");
    RewardSpec spec{std::move(f), std::move(g), std::nullopt};
    if (recurrent_classes(model).size() == 1)
        spec.mu_f = stationary_distribution(model).integrate(spec.f);
    return spec;
}

Vector clamp_reward(const Vector& g, double n) {
    if (!(n >= 0.0)) fail(ErrorCode::InvalidArgument, "truncation level must be nonnegative");
    return g.cwiseMax(-n).cwiseMin(n);
}

}  // namespace ergostop
