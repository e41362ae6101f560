#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "ergostop/ergodicity.hpp"
#include "ergostop/finite_horizon.hpp"
#include "ergostop/markov.hpp"
#include "ergostop/rewards.hpp"

namespace ergostop {

/// Value of a rule that strands probability mass away from its stop set.
inline constexpr double kMinusInfinity = -std::numeric_limits<double>::infinity();

struct SolverOptions {
    double tol = 1e-10;                 // value-iteration sup-increment
    double tie_tolerance = kTieTolerance;
    std::size_t max_value_iterations = 20000;
    std::size_t max_policy_iterations = 500;
    double certify_tolerance = 1e-9;    // fixed-point residual of the evaluated rule
    double agreement_tolerance = 1e-8;  // value iteration must not exceed the evaluated rule
};

/// Undiscounted infinite-horizon stopping value and its certificate.
struct InfiniteHorizonSolution {
    Vector w;
    Vector terminal;
    Region region;  // S* = {x : g(x) >= w(x) - tie}
    double tie_tolerance = kTieTolerance;
    double fixed_point_residual = 0.0;
    bool certified = false;

    std::size_t value_iterations = 0;
    std::size_t policy_iterations = 0;
    double value_iteration_gap = 0.0;  // max (w_VI - w); <= 0 up to round-off
    bool iterates_monotone = true;

    Vector expected_tau;  // E^x[tau*] in time units

    // Filled by stopping_time_bound.
    Vector gamma;
    Vector d;
    Vector Z;
};

/// Value iteration from g followed by policy iteration and exact evaluation of
/// the resulting stop set. No drift check: callers own that precondition.
InfiniteHorizonSolution solve_undiscounted_stopping(const MarkovModel& model, const Vector& running,
                                                    const Vector& terminal,
                                                    const SolverOptions& options = {});

/// Requires mu(f) < 0 (DriftNotNegative otherwise) and a unique stationary law.
/// An uncertified result is returned with certified == false.
InfiniteHorizonSolution solve_infinite_horizon(const MarkovModel& model, const RewardSpec& rewards,
                                               const SolverOptions& options = {});

/// Throws NotCertified unless the solution carries a certificate.
void require_certified(const InfiniteHorizonSolution& solution);

/// Expected reward of the hitting rule of `region`: g on the region, and on the
/// complement the solution of (I - P_CC) v = dt f_C + P_CS g_S. States that miss
/// the region with positive probability get kMinusInfinity.
Vector region_value(const MarkovModel& model, const Vector& running, const Vector& terminal,
                    const Region& region);
Vector region_value(const MarkovModel& model, const RewardSpec& rewards, const Region& region);

/// E^x of the hitting time of `region` in time units; +inf where not hit surely.
Vector mean_hitting_time(const MarkovModel& model, const Region& region);

struct RegionOracleResult {
    Vector w;
    std::vector<Region> optimal_regions;  // every region optimal at all states at once
    /// Stop set of the smallest optimal stopping time: the largest optimal
    /// region, which contains every other optimal region.
    Region smallest_time_region;
};

inline constexpr std::size_t kOracleMaxStates = 20;

/// Exhaustive search over all nonempty stop sets.
RegionOracleResult brute_force_region_oracle(const MarkovModel& model, const RewardSpec& rewards,
                                             double tol = 1e-9);

/// {x : w(x) <= g(x) + eps}.
Region stopping_rule_eps(const InfiniteHorizonSolution& solution, double eps);

/// d(x) = delta * mu(f) at every state.
Vector default_d(const RewardSpec& rewards, double delta = 0.5);

/// gamma(x) = sup_tau liminf_T E^x{ sum_{k < tau ^ T} dt (f(X_k) - d(x)) }.
Vector gamma_value(const MarkovModel& model, const Vector& f, const Vector& d,
                   const SolverOptions& options = {});

struct StoppingBound {
    Vector gamma;
    Vector d;
    Vector Z;             // (gamma + E{zeta+} - g + 1) / (-d)
    Vector expected_tau;  // E^x[tau*]
    double zeta_plus = 0.0;
    bool holds = false;
};

/// Computes Z and checks E^x[tau*] <= Z(x); attaches gamma, d, Z to the
/// solution. Throws BoundViolated when the bound fails anywhere.
StoppingBound stopping_time_bound(const MarkovModel& model, const RewardSpec& rewards,
                                  InfiniteHorizonSolution& solution, const Vector& d,
                                  const SolverOptions& options = {});

struct ConditionSReport {
    double delta = 0.5;
    Vector bar_gamma;
    Vector gamma;  // gamma with d = delta mu(f)
    double identity_gap = 0.0;
    bool holds = false;
};

ConditionSReport check_condition_S(const MarkovModel& model, const RewardSpec& rewards,
                                   const ZeroPotential& potential, double delta,
                                   const SolverOptions& options = {});

struct CompactifiedReward {
    StateIndex center = 0;
    int N = 0;          // ball radius
    Vector z;           // 1 - min(rho(x, B_N), 1)
    Vector f_hat;       // z f
    Vector f_bar;       // max(f, f_hat)
    double mu_f = 0.0;
    double mu_f_bar = 0.0;
    double tail_integral = 0.0;  // integral of |f| over the complement of B_N
    Region ball_N;
    Region ball_N1;
};

CompactifiedReward compactify_running_reward(const MarkovModel& model, const Vector& f,
                                             const Distribution& mu, StateIndex center = 0);

}  // namespace ergostop
