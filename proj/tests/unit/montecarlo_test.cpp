#include <cmath>

#include <gtest/gtest.h>

#include "ergostop/infinite_horizon.hpp"
#include "ergostop/montecarlo.hpp"
#include "expect_error.hpp"
#include "oracles.hpp"

namespace ergostop {
namespace {

using testing::chain_a;
using testing::chain_a_rewards;

const std::vector<std::size_t> kHorizons{8, 16, 32, 64};

McOptions opts(std::size_t paths, std::uint64_t seed, std::size_t workers = 0) {
    McOptions o;
    o.n_paths = paths;
    o.seed = seed;
    o.workers = workers;
    return o;
}

TEST(EstimateFunctional, StopEverywhereIsExact) {
    const MarkovModel m = chain_a();
    const FunctionalEstimate fe = estimate_functional(m, chain_a_rewards(m), Region::all(2), 1, kHorizons, opts(500, 1));
    for (const auto& h : fe.horizons) {
        EXPECT_EQ(h.mean, 5.0);
        EXPECT_EQ(h.std_error, 0.0);
    }
    EXPECT_EQ(fe.verdict, TrendVerdict::Converged);
}

TEST(EstimateFunctional, ChainABracketsTheValue) {
    const MarkovModel m = chain_a();
    const RewardSpec r = chain_a_rewards(m);
    const Region region = Region::from_indices(2, std::vector<StateIndex>{1});
    const double exact = region_value(m, r, region)(0);
    const FunctionalEstimate fe = estimate_functional(m, r, region, 0, kHorizons, opts(100000, 7));
    for (std::size_t i = 2; i < 4; ++i)
        EXPECT_TRUE(within_z(fe.horizons[i].mean, fe.horizons[i].std_error, exact))
            << fe.horizons[i].mean << " +- " << fe.horizons[i].std_error;
    EXPECT_LE(fe.liminf_window, fe.limsup_window);
    EXPECT_TRUE(within_z(fe.liminf_window, fe.horizons.back().std_error, fe.limsup_window, fe.horizons.back().std_error));
}

TEST(EstimateFunctional, AbsorbingChainTrendsToMinusInfinity) {
    const MarkovModel m = build_dtmc(testing::state_names(2), Matrix::Identity(2, 2), 1.0);
    const RewardSpec r = make_rewards(m, Vector::Constant(2, -1.0), Vector{{3.0, 0.0}});
    const Region region = Region::from_indices(2, std::vector<StateIndex>{1});
    const FunctionalEstimate fe = estimate_functional(m, r, region, 0, kHorizons, opts(100, 3));
    for (const auto& h : fe.horizons) {
        EXPECT_EQ(h.mean, -static_cast<double>(h.steps) + 3.0);
        EXPECT_EQ(h.std_error, 0.0);
    }
    EXPECT_EQ(fe.verdict, TrendVerdict::MinusInfinityTrend);
    EXPECT_EQ(fe.liminf_window, -61.0);
}

TEST(EstimateFunctional, ReproducibleAcrossWorkers) {
    const MarkovModel m = testing::chain_b();
    const RewardSpec r = make_rewards(m, Vector{{-3.0, -3.0, -3.0, 1.0, 1.0}}, Vector{{0.0, 1.0, 2.0, 3.0, 6.0}});
    const Region region = Region::from_indices(5, std::vector<StateIndex>{4});
    const FunctionalEstimate a = estimate_functional(m, r, region, 0, kHorizons, opts(3000, 9, 1));
    const FunctionalEstimate b = estimate_functional(m, r, region, 0, kHorizons, opts(3000, 9, 5));
    for (std::size_t i = 0; i < kHorizons.size(); ++i) {
        EXPECT_EQ(a.horizons[i].mean, b.horizons[i].mean);
        EXPECT_EQ(a.horizons[i].std_error, b.horizons[i].std_error);
    }
}

TEST(EstimateFunctional, Validation) {
    const MarkovModel m = chain_a();
    const RewardSpec r = chain_a_rewards(m);
    EXPECT_ERROR_CODE(estimate_functional(m, r, Region::all(2), 0, {8, 4}, opts(10, 1)), ErrorCode::InvalidArgument);
    EXPECT_ERROR_CODE(estimate_functional(m, r, Region::all(3), 0, {8}, opts(10, 1)), ErrorCode::DimensionMismatch);
}

TEST(ZetaTail, TrivialCases) {
    const MarkovModel m = chain_a();
    const ZetaTailEstimate above = estimate_zeta_plus_tail(m, Vector{{0.0, 5.0}}, 0, 20, {5.0, 7.0}, opts(1000, 1));
    for (double v : above.estimate) EXPECT_EQ(v, 0.0);
    const ZetaTailEstimate neg = estimate_zeta_plus_tail(m, Vector{{-1.0, -5.0}}, 0, 20, {0.0, 1.0}, opts(1000, 1));
    for (double v : neg.estimate) EXPECT_EQ(v, 0.0);
    EXPECT_ERROR_CODE(estimate_zeta_plus_tail(m, Vector{{0.0, 5.0}}, 0, 20, {3.0, 1.0}, opts(10, 1)),
                      ErrorCode::InvalidArgument);
}

TEST(ZetaTail, ChainAApproachesRecurrenceValue) {
    const MarkovModel m = chain_a();
    const Vector g{{0.0, 5.0}};
    const ZetaTailEstimate zt = estimate_zeta_plus_tail(m, g, 0, 64, {0.0, 3.0, 4.0, 6.0}, opts(100000, 2));
    const double hit = testing::hit_probability(m, Region::from_indices(2, std::vector<StateIndex>{1}), 64)(0);
    EXPECT_NEAR(hit, 1.0 - std::pow(0.6, 64), 1e-15);
    EXPECT_NEAR(zt.exact_at_horizon[1], 5.0 * hit, 1e-12);
    EXPECT_EQ(zt.exact_limit[1], 5.0);
    EXPECT_TRUE(within_z(zt.estimate[1], zt.std_error[1], zt.exact_at_horizon[1]));
    for (std::size_t i = 0; i < zt.thresholds.size(); ++i) {
        EXPECT_GE(zt.estimate[i], 0.0);
        EXPECT_LE(zt.exact_at_horizon[i], zt.exact_limit[i] + 1e-12);
        if (i > 0) EXPECT_LE(zt.estimate[i], zt.estimate[i - 1]);
    }
    const ZetaTailEstimate short_run = estimate_zeta_plus_tail(m, g, 0, 2, {3.0}, opts(10, 2));
    EXPECT_NEAR(short_run.exact_at_horizon[0], 5.0 * 0.64, 1e-12);
}

TEST(TerminalGap, TrivialCases) {
    const MarkovModel m = chain_a();
    const RewardSpec r = chain_a_rewards(m);
    const Region stop1 = Region::from_indices(2, std::vector<StateIndex>{1});
    const TerminalGapEstimate pos = terminal_truncation_gap(m, r, stop1, 0, kHorizons, opts(2000, 4));
    for (double v : pos.g_minus_term) EXPECT_EQ(v, 0.0);
    EXPECT_TRUE(pos.pass);
    const TerminalGapEstimate all = terminal_truncation_gap(m, r, Region::all(2), 0, kHorizons, opts(200, 4));
    for (double v : all.gap) EXPECT_EQ(v, 0.0);
    EXPECT_TRUE(all.pass);
}

TEST(TerminalGap, ChainANegativeTerminalVanishesGeometrically) {
    const MarkovModel m = chain_a();
    const RewardSpec r = make_rewards(m, Vector{{2.0, -4.0}}, Vector{{-4.0, 5.0}});
    const Region stop1 = Region::from_indices(2, std::vector<StateIndex>{1});
    const std::vector<std::size_t> horizons{1, 2, 4, 8, 16, 64};
    const TerminalGapEstimate tg = terminal_truncation_gap(m, r, stop1, 0, horizons, opts(100000, 5));
    for (std::size_t i = 0; i < horizons.size(); ++i) {
        const double exact = 4.0 * std::pow(0.6, static_cast<double>(horizons[i]));
        EXPECT_TRUE(within_z(tg.g_minus_term[i], tg.g_minus_se[i], exact))
            << horizons[i] << ": " << tg.g_minus_term[i] << " vs " << exact;
    }
    EXPECT_TRUE(tg.pass);
}

TEST(TerminalGap, UnreachableRegion) {
    const MarkovModel m = build_dtmc(testing::state_names(2), Matrix::Identity(2, 2), 1.0);
    const RewardSpec r = make_rewards(m, Vector::Constant(2, -1.0), Vector::Zero(2));
    EXPECT_ERROR_CODE(terminal_truncation_gap(m, r, Region::from_indices(2, std::vector<StateIndex>{1}), 0, kHorizons,
                                              opts(10, 1)),
                      ErrorCode::UnreachableRegion);
}

}  // namespace
}  // namespace ergostop
