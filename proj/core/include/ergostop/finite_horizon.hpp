#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "ergostop/markov.hpp"
#include "ergostop/rewards.hpp"

namespace ergostop {

/// Absolute tolerance for g >= w comparisons: stopping on (near) equality
/// gives the smallest optimal stopping time.
inline constexpr double kTieTolerance = 1e-9;

/// Bermudan Snell surface on the grid.
///
/// Timing convention at each grid time: either stop and collect g, or collect
/// dt * f at the current state and move one step. surface[k] is the value with
/// k steps remaining, so surface[0] = g and
///     surface[k + 1] = max(g, dt f + P surface[k]).
struct FiniteHorizonSolution {
    std::size_t horizon_steps = 0;
    double dt = 1.0;
    std::vector<Vector> surface;
    std::vector<Region> rule;  // rule[k]: stop set with k steps remaining
    Vector terminal;           // the terminal reward used (clamped when truncated)
    std::optional<double> truncation_level;
    double tie_tolerance = kTieTolerance;
};

FiniteHorizonSolution solve_finite_horizon(const MarkovModel& model, const RewardSpec& rewards,
                                           std::size_t horizon_steps,
                                           double tie_tolerance = kTieTolerance);

/// Same recursion with g replaced by its clamp to [-n, n].
FiniteHorizonSolution solve_truncated(const MarkovModel& model, const RewardSpec& rewards,
                                      std::size_t horizon_steps, double n,
                                      double tie_tolerance = kTieTolerance);

inline constexpr std::size_t kDefaultAugmentationCap = std::size_t{1} << 22;

/// E^x{ phi(M) } for every start x, where M = max_{k <= steps} level(X_k).
///
/// Computed exactly on the chain augmented with the running maximum; the
/// augmented space has size |E| x #distinct levels, capped by `cap`.
Vector running_max_expectation(const MarkovModel& model, const Vector& level, std::size_t steps,
                               const std::function<double(double)>& phi,
                               std::size_t cap = kDefaultAugmentationCap);

/// E^x{ zeta_T 1{zeta_T > n} } with zeta_T = max_{k <= T} |g(X_k)|, for every start.
Vector truncation_gap_bounds(const MarkovModel& model, const RewardSpec& rewards,
                             std::size_t horizon_steps, double n,
                             std::size_t cap = kDefaultAugmentationCap);

/// Single-start form; bounds |w_T(start) - w^n_T(start)|.
double truncation_gap_bound(const MarkovModel& model, const RewardSpec& rewards,
                            std::size_t horizon_steps, double n, StateIndex start,
                            std::size_t cap = kDefaultAugmentationCap);

struct SupermartingaleReport {
    double max_residual = 0.0;          // max over (x, k) of dt f + P w_k - w_{k+1}
    double max_continuation_gap = 0.0;  // max |residual| on continuation sets
    bool ok = false;
};

/// Independent one-step re-check of the surface: the residual
/// dt f(x) + (P w_k)(x) - w_{k+1}(x) must be <= tol, and zero where continuing.
SupermartingaleReport check_supermartingale(const MarkovModel& model, const RewardSpec& rewards,
                                            const FiniteHorizonSolution& solution,
                                            double tol = 1e-10);

struct TailOptions {
    std::vector<double> n_grid;  // truncation thresholds; default derived from |g|
    std::vector<double> R_grid;  // radii for b(n, R); default 0, 1, ... past the diameter
    std::vector<double> N_grid;  // norm thresholds for the g*(xi_T) tail
    std::size_t augmentation_cap = kDefaultAugmentationCap;
};

/// Uniform-integrability diagnostics over a probe set K of start states.
///
/// Every quantity is a supremum over y in K and is computed exactly.
/// Shell i of the nested family is K_i \ K_{i-1} with K_0 = {} (so shell 1 is K_1).
struct TailReport {
    std::vector<double> n_grid;
    std::vector<double> zeta_tail;  // sup_y E^y{zeta_T 1{zeta_T > n}}
    std::vector<double> a;          // a(n) = sup_y sup_tau E^y{|g(X_tau)| 1{|g(X_tau)| > n}}

    std::vector<double> R_grid;                // empty without coords
    std::vector<std::vector<double>> b;        // b[n][R]
    std::vector<double> distant_reward;        // sup_y sup_tau E^y{1{rho(y, X_tau) >= R} |g(X_tau)|}

    std::vector<Vector> gamma;                 // gamma_T(., K_i) per nested set
    std::vector<double> shell_max_abs_g;       // max |g| over shell i
    std::vector<double> set_max_abs_g;         // max |g| over K_i
    std::vector<double> b1_terms;              // sup_y (gamma(y,K_i) - gamma(y,K_{i-1})) max_{K_i}|g|
    double b1_sum = 0.0;
    std::vector<double> b1_tail;               // per n: sum of terms with max_{K_i}|g| > n
    std::vector<double> b2_terms;              // max_{shell}|g| sup_y P^y(visit shell by T)
    double b2_sum = 0.0;
    std::vector<double> b2_tail;               // per n

    std::vector<double> N_grid;                // empty without coords
    std::vector<double> b3_tail;               // sup_y E^y{g*(xi_T) 1{xi_T > N}}
};

TailReport b_family_diagnostics(const MarkovModel& model, const RewardSpec& rewards,
                                std::size_t horizon_steps, const std::vector<Region>& nested_sets,
                                const Region& probe_ball, TailOptions options = {});

/// P^x{ X_k in U for k = 0..steps }.
Vector stay_probability(const MarkovModel& model, const Region& set, std::size_t steps);

/// sup_{tau <= steps} E^x{ payoff(X_tau) } with no running reward.
Vector max_expected_payoff(const MarkovModel& model, const Vector& payoff, std::size_t steps);

}  // namespace ergostop
