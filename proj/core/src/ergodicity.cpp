#include "ergostop/ergodicity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ergostop/errors.hpp"
#include "ergostop/sampling.hpp"

namespace ergostop {

namespace {

constexpr double kFloorK = 1e-12;
constexpr double kNoiseFloor = 1e-13;

std::size_t grid_steps(double time, double dt, const char* what) {
    const double ratio = time / dt;
    const double steps = std::round(ratio);
    if (!(time >= 0.0) || std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio)) {
        std::ostringstream os;
        os << what << " = " << time << " is not a multiple of dt = " << dt;
        fail(ErrorCode::InvalidArgument, os.str());
    }
    return static_cast<std::size_t>(steps);
}

}  // namespace

ErgodicProfile tv_distance_curve(const MarkovModel& model, const Distribution& mu,
                                 std::span<const StateIndex> probe_states, double max_time) {
    model.check_dimension(mu.size(), "mu");
    const std::size_t m = grid_steps(max_time, model.dt(), "max_time");
    if (m == 0) fail(ErrorCode::InvalidArgument, "max_time must cover at least one step");
    if (probe_states.empty()) fail(ErrorCode::InvalidArgument, "no probe states");

    ErgodicProfile profile;
    profile.dt = model.dt();
    profile.probes.assign(probe_states.begin(), probe_states.end());
    for (StateIndex x : profile.probes)
        if (x >= model.size()) fail(ErrorCode::InvalidArgument, "probe state out of range");
    profile.tv.assign(profile.probes.size(), {});

    // Rows of P^k for the probe states, advanced one step at a time.
    const auto n = static_cast<Eigen::Index>(model.size());
    Matrix rows(static_cast<Eigen::Index>(profile.probes.size()), n);
    rows.setZero();
    for (std::size_t i = 0; i < profile.probes.size(); ++i)
        rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(profile.probes[i])) = 1.0;
    const Eigen::RowVectorXd mu_row = mu.weights().transpose();

    for (std::size_t k = 1; k <= m; ++k) {
        rows = rows * model.kernel();
        profile.times.push_back(static_cast<double>(k) * model.dt());
        for (std::size_t i = 0; i < profile.probes.size(); ++i) {
            const double tv = (rows.row(static_cast<Eigen::Index>(i)) - mu_row).cwiseAbs().sum();
            profile.tv[i].push_back(std::min(tv, 2.0));
        }
    }
    return profile;
}

ErgodicProfile fit_ergodic_bound(ErgodicProfile profile) {
    if (profile.tv.empty() || profile.times.empty())
        fail(ErrorCode::InvalidArgument, "profile has no TV curve");
    const std::size_t m = profile.times.size();

    for (std::size_t i = 0; i < profile.probes.size(); ++i) {
        const auto& curve = profile.tv[i];
        const bool stuck_far = curve.back() > 1.99;
        const bool no_decay = curve.front() > kFloorK && curve.back() >= curve.front() * (1.0 - 1e-9);
        if (stuck_far || no_decay) {
            std::ostringstream os;
            os << "TV distance from probe state " << profile.probes[i] << " stays at "
               << curve.back() << " over the window";
            fail(ErrorCode::NoMixingDetected, os.str());
        }
    }

    profile.K.resize(profile.probes.size());
    for (std::size_t i = 0; i < profile.probes.size(); ++i)
        profile.K[i] = std::max(profile.tv[i].front(), kFloorK);

    std::vector<double> ratio(m, 0.0);
    for (std::size_t k = 0; k < m; ++k)
        for (std::size_t i = 0; i < profile.probes.size(); ++i)
            ratio[k] = std::max(ratio[k], profile.tv[i][k] / profile.K[i]);

    // Nonincreasing envelope keeps the dominance TV <= K h.
    profile.h.assign(m, 0.0);
    double running = 0.0;
    for (std::size_t k = m; k-- > 0;) {
        running = std::max(running, ratio[k]);
        profile.h[k] = running;
    }

    // Geometric tail fitted on the last third of the part of h above round-off.
    std::size_t effective = 0;
    const double scale = profile.h.front();
    while (effective < m && profile.h[effective] > kNoiseFloor * std::max(scale, 1.0)) ++effective;
    if (effective < 2) {
        profile.tail_ratio = 0.0;
    } else {
        const std::size_t span = std::max<std::size_t>(1, effective / 3);
        const double last = profile.h[effective - 1];
        const double first = profile.h[effective - 1 - span];
        profile.tail_ratio = std::pow(last / first, 1.0 / static_cast<double>(span));
    }
    profile.a2_plausible = profile.tail_ratio < 1.0;

    double integral = 0.0;
    for (double v : profile.h) integral += v * profile.dt;
    if (profile.a2_plausible)
        integral += profile.dt * profile.h.back() * profile.tail_ratio / (1.0 - profile.tail_ratio);
    else
        integral = std::numeric_limits<double>::infinity();
    profile.integral_h = integral;
    return profile;
}

ZeroPotential zero_potential(const MarkovModel& model, const Vector& f, const Distribution& mu) {
    model.check_dimension(static_cast<std::size_t>(f.size()), "f");
    model.check_dimension(mu.size(), "mu");
    const auto classes = recurrent_classes(model);
    if (classes.size() != 1)
        fail(ErrorCode::SingularSystem, "Poisson equation needs a single recurrent class");
    const std::size_t period = recurrent_period(model);
    if (period != 1) {
        std::ostringstream os;
        os << "chain has period " << period << "; the zero-potential series does not converge";
        fail(ErrorCode::SingularSystem, os.str());
    }

    const auto n = static_cast<Eigen::Index>(model.size());
    const Matrix& p = model.kernel();
    const double mu_f = mu.integrate(f);
    const Vector rhs = model.dt() * (f.array() - mu_f).matrix();

    // (I - P + 1 mu^T) is the inverse of the fundamental matrix; its solution is centred.
    const Matrix system = Matrix::Identity(n, n) - p + Vector::Ones(n) * mu.weights().transpose();
    const auto lu = system.fullPivLu();
    if (!lu.isInvertible()) fail(ErrorCode::SingularSystem, "fundamental matrix is singular");
    Vector q = lu.solve(rhs);
    q += lu.solve(rhs - system * q);

    ZeroPotential out;
    out.mu_f = mu_f;
    out.residual = ((Matrix::Identity(n, n) - p) * q - rhs).cwiseAbs().maxCoeff();
    out.centred = std::abs(mu.integrate(q));
    out.q = std::move(q);
    return out;
}

DynkinReport verify_dynkin_identity(const MarkovModel& model, const ZeroPotential& potential,
                                    const Vector& f, const Region& stop_region,
                                    std::size_t cap_steps, StateIndex start, std::size_t n_paths,
                                    std::uint64_t seed, std::size_t workers) {
    model.check_dimension(static_cast<std::size_t>(f.size()), "f");
    model.check_dimension(static_cast<std::size_t>(potential.q.size()), "q");
    model.check_dimension(stop_region.universe(), "stop region");
    if (start >= model.size()) fail(ErrorCode::InvalidArgument, "start state out of range");
    if (n_paths == 0) fail(ErrorCode::InvalidArgument, "n_paths must be at least 1");

    const double dt = model.dt();
    const Vector centred = (f.array() - potential.mu_f).matrix();
    const TransitionSampler sampler(model);
    std::vector<double> samples(n_paths);
    parallel_for_index(n_paths, workers, [&](std::size_t i) {
        PathStream stream(seed, i);
        StateIndex x = start;
        double acc = 0.0;
        for (std::size_t k = 0; k < cap_steps && !stop_region.contains(x); ++k) {
            acc += dt * centred(static_cast<Eigen::Index>(x));
            x = sampler.next(x, stream);
        }
        samples[i] = acc + potential.q(static_cast<Eigen::Index>(x));
    });

    // Welford in path order: identical samples give their value and zero spread exactly.
    double mean = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < n_paths; ++i) {
        const double delta = samples[i] - mean;
        mean += delta / static_cast<double>(i + 1);
        ss += delta * (samples[i] - mean);
    }
    const double var = n_paths > 1 ? ss / static_cast<double>(n_paths - 1) : 0.0;

    DynkinReport report;
    report.estimate = mean;
    report.std_error = std::sqrt(var / static_cast<double>(n_paths));
    report.reference = potential.q(static_cast<Eigen::Index>(start));
    const double diff = report.estimate - report.reference;
    if (std::abs(diff) <= 1e-12 * std::max(1.0, std::abs(report.reference))) report.z_score = 0.0;
    else if (report.std_error > 0.0) report.z_score = diff / report.std_error;
    else report.z_score = std::copysign(std::numeric_limits<double>::infinity(), diff);
    report.pass = std::abs(report.z_score) <= 3.0;
    return report;
}

}  // namespace ergostop
