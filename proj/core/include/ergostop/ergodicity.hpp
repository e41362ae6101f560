#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ergostop/markov.hpp"

namespace ergostop {

/// Mixing profile ||P_t(x, .) - mu||_TV <= K(x) h(t) on a probed window.
///
/// TV uses the unnormalized convention sum_i |p_i - q_i|, so values lie in [0, 2].
struct ErgodicProfile {
    double dt = 1.0;
    std::vector<StateIndex> probes;
    std::vector<double> times;                // t_k = k dt, k = 1..m
    std::vector<std::vector<double>> tv;      // tv[probe][k-1]

    // Filled by fit_ergodic_bound.
    std::vector<double> K;                    // per probe
    std::vector<double> h;                    // per time, nonincreasing
    double tail_ratio = 0.0;                  // geometric ratio per step fitted on the last third
    double integral_h = 0.0;                  // dt * sum h + fitted geometric tail
    bool a2_plausible = false;
};

ErgodicProfile tv_distance_curve(const MarkovModel& model, const Distribution& mu,
                                 std::span<const StateIndex> probe_states, double max_time);

/// Throws NoMixingDetected when some probe never leaves TV ~ 2 or shows no decay at all.
ErgodicProfile fit_ergodic_bound(ErgodicProfile profile);

/// Centred solution of the Poisson equation (I - P)q = dt (f - mu(f)), mu(q) = 0.
struct ZeroPotential {
    Vector q;
    double mu_f = 0.0;
    double residual = 0.0;  // max |(I - P)q - dt (f - mu(f))|
    double centred = 0.0;   // |mu(q)|
};

ZeroPotential zero_potential(const MarkovModel& model, const Vector& f, const Distribution& mu);

struct DynkinReport {
    double estimate = 0.0;
    double std_error = 0.0;
    double reference = 0.0;  // q(start)
    double z_score = 0.0;
    bool pass = false;
};

/// Monte Carlo check of q(x) = E^x{ sum_{k < tau} dt (f(X_k) - mu(f)) + q(X_tau) }
/// with tau = min(hitting time of stop_region, cap_steps).
DynkinReport verify_dynkin_identity(const MarkovModel& model, const ZeroPotential& potential,
                                    const Vector& f, const Region& stop_region,
                                    std::size_t cap_steps, StateIndex start, std::size_t n_paths,
                                    std::uint64_t seed, std::size_t workers = 0);

}  // namespace ergostop
