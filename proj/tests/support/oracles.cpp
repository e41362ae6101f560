#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace ergostop::testing {

namespace {

Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

}  // namespace

std::vector<std::string> state_names(std::size_t n) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back(std::to_string(i));
    return names;
}

MarkovModel chain_a() {
    Matrix p(2, 2);
    p << 0.6, 0.4, 0.2, 0.8;
    Matrix coords(2, 1);
    coords << 0.0, 1.0;
    return build_dtmc(state_names(2), p, 1.0, coords);
}

RewardSpec chain_a_rewards(const MarkovModel& model) {
    return make_rewards(model, Vector{{2.0, -4.0}}, Vector{{0.0, 5.0}});
}

Matrix lazy_walk_kernel(std::size_t n, double hold) {
    Matrix p = Matrix::Zero(ix(n), ix(n));
    for (std::size_t i = 0; i < n; ++i) {
        p(ix(i), ix(i)) = hold;
        std::vector<std::size_t> nb;
        if (i > 0) nb.push_back(i - 1);
        if (i + 1 < n) nb.push_back(i + 1);
        for (std::size_t j : nb) p(ix(i), ix(j)) = (1.0 - hold) / static_cast<double>(nb.size());
    }
    return p;
}

namespace {

Matrix line_coords(std::size_t n) {
    Matrix c(ix(n), 1);
    for (std::size_t i = 0; i < n; ++i) c(ix(i), 0) = static_cast<double>(i);
    return c;
}

}  // namespace

MarkovModel chain_b() { return build_dtmc(state_names(5), lazy_walk_kernel(), 1.0, line_coords(5)); }

MarkovModel chain_b_from_generator(double dt) {
    const Matrix q = lazy_walk_kernel() - Matrix::Identity(5, 5);
    return build_from_generator(state_names(5), q, dt, line_coords(5));
}

std::vector<Instance> random_corpus(std::size_t count, std::size_t min_states,
                                    std::size_t max_states, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> size_dist(min_states, max_states);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Instance> out;
    out.reserve(count);
    while (out.size() < count) {
        const std::size_t n = size_dist(rng);
        Matrix w = Matrix::Zero(ix(n), ix(n));
        for (std::size_t i = 0; i < n; ++i) {
            w(ix(i), ix((i + 1) % n)) = 0.1 + unit(rng);  // ring keeps it irreducible
            for (std::size_t j = 0; j < n; ++j)
                if (unit(rng) < 0.35) w(ix(i), ix(j)) = 0.1 + unit(rng);
        }
        w(0, 0) = 0.1 + unit(rng);  // a self-loop keeps it aperiodic
        for (std::size_t i = 0; i < n; ++i) w.row(ix(i)) /= w.row(ix(i)).sum();
        MarkovModel model = build_dtmc(state_names(n), w, 1.0);

        Vector f(ix(n)), g(ix(n));
        for (std::size_t i = 0; i < n; ++i) {
            f(ix(i)) = -5.0 + 10.0 * unit(rng);
            g(ix(i)) = -5.0 + 15.0 * unit(rng);
        }
        const double mu_f = stationary_distribution(model).integrate(f);
        const double target = -(0.25 + 2.0 * unit(rng));
        f.array() += target - mu_f;
        RewardSpec rewards = make_rewards(model, f, g);
        out.push_back({std::move(model), std::move(rewards)});
    }
    return out;
}

Vector enumerate_rules(const MarkovModel& model, const Vector& f, const Vector& g, std::size_t steps) {
    const std::size_t n = model.size();
    const std::size_t bits = n * steps;
    const Matrix& p = model.kernel();
    Vector best = Vector::Constant(ix(n), -std::numeric_limits<double>::infinity());
    const std::uint64_t rules = std::uint64_t{1} << bits;
    Vector v(ix(n)), next(ix(n));
    for (std::uint64_t rule = 0; rule < rules; ++rule) {
        v = g;  // forced stop at the horizon
        for (std::size_t t = steps; t-- > 0;) {
            for (std::size_t x = 0; x < n; ++x) {
                const bool stop = (rule >> (t * n + x)) & 1u;
                if (stop) {
                    next(ix(x)) = g(ix(x));
                } else {
                    double acc = model.dt() * f(ix(x));
                    for (std::size_t y = 0; y < n; ++y) acc += p(ix(x), ix(y)) * v(ix(y));
                    next(ix(x)) = acc;
                }
            }
            v = next;
        }
        best = best.cwiseMax(v);
    }
    return best;
}

Vector series_potential(const MarkovModel& model, const Vector& f, double mu_f) {
    // Iterate the centred vector; at least 200 terms, then until the terms vanish.
    Vector term = (f.array() - mu_f).matrix();
    Vector sum = Vector::Zero(f.size());
    const double floor = 1e-15 * std::max(1.0, f.cwiseAbs().maxCoeff());
    for (std::size_t k = 0; k < 100000; ++k) {
        sum += model.dt() * term;
        if (k >= 200 && term.cwiseAbs().maxCoeff() < floor) break;
        term = model.kernel() * term;
    }
    return sum;
}

Vector stopped_potential(const MarkovModel& model, const Vector& q, const Vector& f, double mu_f,
                         const Region& region, std::size_t cap) {
    const std::size_t n = model.size();
    Vector u = q;  // value at the cap
    for (std::size_t t = cap; t-- > 0;) {
        Vector next(ix(n));
        const Vector pu = model.kernel() * u;
        for (std::size_t x = 0; x < n; ++x)
            next(ix(x)) = region.contains(x) ? q(ix(x)) : model.dt() * (f(ix(x)) - mu_f) + pu(ix(x));
        u = next;
    }
    return u;
}

Vector enumerate_zeta_tail(const MarkovModel& model, const Vector& g, std::size_t steps, double n) {
    const std::size_t size = model.size();
    const Matrix& p = model.kernel();
    Vector out = Vector::Zero(ix(size));
    std::function<double(std::size_t, std::size_t, double)> walk =
        [&](std::size_t x, std::size_t remaining, double running) -> double {
        const double z = std::max(running, std::abs(g(ix(x))));
        if (remaining == 0) return z > n ? z : 0.0;
        double acc = 0.0;
        for (std::size_t y = 0; y < size; ++y) {
            const double pxy = p(ix(x), ix(y));
            if (pxy > 0.0) acc += pxy * walk(y, remaining - 1, z);
        }
        return acc;
    };
    for (std::size_t x = 0; x < size; ++x) out(ix(x)) = walk(x, steps, 0.0);
    return out;
}

Vector hit_probability(const MarkovModel& model, const Region& region, std::size_t steps) {
    const std::size_t n = model.size();
    Vector h(ix(n));
    for (std::size_t x = 0; x < n; ++x) h(ix(x)) = region.contains(x) ? 1.0 : 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
        Vector next = model.kernel() * h;
        for (std::size_t x = 0; x < n; ++x)
            if (region.contains(x)) next(ix(x)) = 1.0;
        h = next;
    }
    return h;
}

}  // namespace ergostop::testing
