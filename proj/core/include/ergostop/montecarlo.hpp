#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "ergostop/markov.hpp"
#include "ergostop/rewards.hpp"

namespace ergostop {

/// 3 standard errors, used by every statistical verdict.
inline constexpr double kZThreshold = 3.0;

struct McOptions {
    std::size_t n_paths = 100000;
    std::uint64_t seed = 20140101;
    std::size_t workers = 0;
    std::size_t max_steps = 50'000'000;  // safety cap when simulating up to a hitting time
};

enum class TrendVerdict { Converged, MinusInfinityTrend, Inconclusive };

std::string_view to_string(TrendVerdict verdict) noexcept;

struct HorizonEstimate {
    std::size_t steps = 0;
    double time = 0.0;
    double mean = 0.0;
    double std_error = 0.0;
};

/// Capped functional E^x{ sum_{k < tau ^ T} dt f(X_k) + g(X_{tau ^ T}) } per horizon,
/// tau the hitting time of the region.
struct FunctionalEstimate {
    std::vector<HorizonEstimate> horizons;
    double liminf_window = 0.0;  // min over the largest quartile of horizons
    double limsup_window = 0.0;  // max over the same window
    TrendVerdict verdict = TrendVerdict::Inconclusive;
};

FunctionalEstimate estimate_functional(const MarkovModel& model, const RewardSpec& rewards,
                                       const Region& region, StateIndex start,
                                       const std::vector<std::size_t>& horizon_steps,
                                       const McOptions& options = {});

/// Tail of zeta+ = sup_k g+(X_k) observed up to a horizon.
struct ZetaTailEstimate {
    std::size_t horizon_steps = 0;
    std::vector<double> thresholds;
    std::vector<double> estimate;    // E{zeta+ 1{zeta+ > n}}
    std::vector<double> std_error;
    std::vector<double> exact_at_horizon;  // running-max augmentation
    std::vector<double> exact_limit;       // max reachable g+ (recurrence)
};

ZetaTailEstimate estimate_zeta_plus_tail(const MarkovModel& model, const Vector& g, StateIndex start,
                                         std::size_t horizon_steps,
                                         const std::vector<double>& thresholds,
                                         const McOptions& options = {});

/// Per horizon T: E{1{tau > T} g-(X_T)} and the gap between the uncapped and
/// the capped functional.
struct TerminalGapEstimate {
    std::vector<std::size_t> horizon_steps;
    std::vector<double> g_minus_term;
    std::vector<double> g_minus_se;
    std::vector<double> gap;
    std::vector<double> gap_se;
    double uncapped_mean = 0.0;
    double uncapped_se = 0.0;
    bool pass = false;
};

TerminalGapEstimate terminal_truncation_gap(const MarkovModel& model, const RewardSpec& rewards,
                                            const Region& region, StateIndex start,
                                            const std::vector<std::size_t>& horizon_steps,
                                            const McOptions& options = {});

/// |a - b| within kZThreshold combined standard errors (exact match when both are zero).
bool within_z(double a, double se_a, double b, double se_b = 0.0);

}  // namespace ergostop
