#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "ergostop/finite_horizon.hpp"
#include "expect_error.hpp"
#include "oracles.hpp"

namespace ergostop {
namespace {

using testing::chain_a;
using testing::chain_a_rewards;

double max_abs(const Vector& v) { return v.cwiseAbs().maxCoeff(); }

TEST(SolveFiniteHorizon, LosingRunningRewardStopsImmediately) {
    const MarkovModel m = testing::chain_b();
    const RewardSpec r = make_rewards(m, Vector::Constant(5, -1.0), Vector::Zero(5));
    const FiniteHorizonSolution sol = solve_finite_horizon(m, r, 6);
    for (std::size_t k = 0; k <= 6; ++k) {
        EXPECT_EQ(max_abs(sol.surface[k]), 0.0);
        EXPECT_EQ(sol.rule[k], Region::all(5));
    }
}

TEST(SolveFiniteHorizon, ZeroHorizon) {
    const MarkovModel m = chain_a();
    const RewardSpec r = chain_a_rewards(m);
    const FiniteHorizonSolution sol = solve_finite_horizon(m, r, 0);
    ASSERT_EQ(sol.surface.size(), 1u);
    EXPECT_EQ(sol.surface[0], r.g);
    EXPECT_EQ(sol.rule[0], Region::all(2));
}

TEST(SolveFiniteHorizon, ChainAThreeSteps) {
    const MarkovModel m = chain_a();
    const RewardSpec r = chain_a_rewards(m);
    const FiniteHorizonSolution sol = solve_finite_horizon(m, r, 3);
    const Vector oracle = testing::enumerate_rules(m, r.f, r.g, 3);
    EXPECT_LE((sol.surface[3] - oracle).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(sol.surface[3](0), 7.84, 1e-12);
    EXPECT_NEAR(sol.surface[3](1), 5.0, 1e-12);
}

TEST(SolveFiniteHorizon, MatchesRuleEnumeration) {
    for (const auto& inst : testing::random_corpus(40, 2, 4, 31)) {
        for (std::size_t steps = 0; steps <= 3; ++steps) {
            const FiniteHorizonSolution sol = solve_finite_horizon(inst.model, inst.rewards, steps);
            const Vector oracle = testing::enumerate_rules(inst.model, inst.rewards.f, inst.rewards.g, steps);
            EXPECT_LE((sol.surface[steps] - oracle).cwiseAbs().maxCoeff(), 1e-9);
        }
    }
}

TEST(SolveFiniteHorizon, SurfaceInvariants) {
    for (const auto& inst : testing::random_corpus(40, 2, 8, 32)) {
        const auto& m = inst.model;
        const auto& r = inst.rewards;
        const FiniteHorizonSolution sol = solve_finite_horizon(m, r, 12);
        EXPECT_EQ(sol.surface[0], r.g);
        for (std::size_t k = 0; k < 12; ++k) {
            const Vector bellman = (m.dt() * r.f + m.kernel() * sol.surface[k]).cwiseMax(r.g);
            EXPECT_LE((bellman - sol.surface[k + 1]).cwiseAbs().maxCoeff(), 1e-12);
            EXPECT_GE((sol.surface[k + 1] - r.g).minCoeff(), 0.0);
        }
        const FiniteHorizonSolution shorter = solve_finite_horizon(m, r, 5);
        for (std::size_t k = 0; k <= 5; ++k) {
            EXPECT_EQ(shorter.surface[k], sol.surface[k]);
            EXPECT_EQ(shorter.rule[k], sol.rule[k]);
        }
        // a priori bound: |w| <= ||f|| T + E{zeta_T}
        const Vector zeta = running_max_expectation(m, r.g.cwiseAbs(), 12, [](double z) { return z; });
        for (std::size_t k = 0; k <= 12; ++k) {
            const double t = static_cast<double>(k) * m.dt();
            const Vector zk = running_max_expectation(m, r.g.cwiseAbs(), k, [](double z) { return z; });
            const Vector bound = (max_abs(r.f) * t + zk.array()).matrix();
            EXPECT_GE((bound - sol.surface[k].cwiseAbs()).minCoeff(), -1e-10);
        }
        EXPECT_GE(zeta.minCoeff(), 0.0);
    }
}

TEST(SolveFiniteHorizon, TieToleranceOnlyEnlargesStopSets) {
    for (const auto& inst : testing::random_corpus(30, 2, 6, 33)) {
        const FiniteHorizonSolution tight = solve_finite_horizon(inst.model, inst.rewards, 8, 0.0);
        const FiniteHorizonSolution loose = solve_finite_horizon(inst.model, inst.rewards, 8, 0.5);
        for (std::size_t k = 0; k <= 8; ++k) EXPECT_TRUE(tight.rule[k].is_subset_of(loose.rule[k]));
    }
}

TEST(SolveFiniteHorizon, RuleIsOptimal) {
    // Evaluating the reported rule reproduces the value.
    for (const auto& inst : testing::random_corpus(30, 2, 6, 34)) {
        const auto& m = inst.model;
        const FiniteHorizonSolution sol = solve_finite_horizon(m, inst.rewards, 10);
        Vector v = inst.rewards.g;
        for (std::size_t k = 1; k <= 10; ++k) {
            const Vector cont = m.dt() * inst.rewards.f + m.kernel() * v;
            for (StateIndex x = 0; x < m.size(); ++x)
                v(static_cast<Eigen::Index>(x)) = sol.rule[k].contains(x) ? inst.rewards.g(static_cast<Eigen::Index>(x))
                                                                          : cont(static_cast<Eigen::Index>(x));
            EXPECT_LE((v - sol.surface[k]).cwiseAbs().maxCoeff(), 1e-8);
        }
    }
}

TEST(SolveTruncated, Examples) {
    const MarkovModel m = chain_a();
    const RewardSpec r = chain_a_rewards(m);
    const FiniteHorizonSolution full = solve_finite_horizon(m, r, 4);
    const FiniteHorizonSolution same = solve_truncated(m, r, 4, 5.0);
    for (std::size_t k = 0; k <= 4; ++k) EXPECT_EQ(full.surface[k], same.surface[k]);
    EXPECT_EQ(*same.truncation_level, 5.0);

    const FiniteHorizonSolution zero = solve_truncated(m, r, 4, 0.0);
    const FiniteHorizonSolution zero_ref = solve_finite_horizon(m, make_rewards(m, r.f, Vector::Zero(2)), 4);
    for (std::size_t k = 0; k <= 4; ++k) EXPECT_EQ(zero.surface[k], zero_ref.surface[k]);
    EXPECT_EQ(zero.terminal, Vector::Zero(2));

    const FiniteHorizonSolution three = solve_truncated(m, r, 4, 3.0);
    const Vector bound = truncation_gap_bounds(m, r, 4, 3.0);
    EXPECT_GE((full.surface[4] - three.surface[4]).minCoeff(), 0.0);
    EXPECT_GE((bound - (full.surface[4] - three.surface[4]).cwiseAbs()).minCoeff(), 0.0);
}

TEST(SolveTruncated, ClampHelper) {
    const Vector c = clamp_reward(Vector{{-7.0, 2.0, 9.0}}, 3.0);
    EXPECT_EQ(c, (Vector{{-3.0, 2.0, 3.0}}));
}

TEST(TruncationGapBound, Examples) {
    const MarkovModel m = chain_a();
    const RewardSpec r = chain_a_rewards(m);
    EXPECT_EQ(truncation_gap_bound(m, r, 5, 5.0, 0), 0.0);
    EXPECT_EQ(truncation_gap_bound(m, r, 0, 3.0, 1), 5.0);
    EXPECT_EQ(truncation_gap_bound(m, r, 0, 3.0, 0), 0.0);
    EXPECT_NEAR(truncation_gap_bound(m, r, 2, 3.0, 0), 3.2, 1e-12);
    EXPECT_ERROR_CODE(truncation_gap_bound(m, r, 2, 3.0, 0, 1), ErrorCode::AugmentationTooLarge);
}

TEST(TruncationGapBound, MatchesPathEnumeration) {
    for (const auto& inst : testing::random_corpus(25, 2, 4, 35)) {
        for (double n : {0.0, 2.0, 5.0, 8.0}) {
            const Vector exact = truncation_gap_bounds(inst.model, inst.rewards, 4, n);
            const Vector oracle = testing::enumerate_zeta_tail(inst.model, inst.rewards.g, 4, n);
            EXPECT_LE((exact - oracle).cwiseAbs().maxCoeff(), 1e-12);
        }
    }
}

TEST(CheckSupermartingale, Examples) {
    const MarkovModel m = chain_a();
    const RewardSpec losing = make_rewards(m, Vector::Constant(2, -1.0), Vector::Zero(2));
    const SupermartingaleReport a = check_supermartingale(m, losing, solve_finite_horizon(m, losing, 4));
    EXPECT_DOUBLE_EQ(a.max_residual, -1.0);
    EXPECT_EQ(a.max_continuation_gap, 0.0);
    EXPECT_TRUE(a.ok);

    const RewardSpec r = chain_a_rewards(m);
    const FiniteHorizonSolution sol = solve_finite_horizon(m, r, 3);
    const SupermartingaleReport b = check_supermartingale(m, r, sol);
    EXPECT_TRUE(b.ok);
    EXPECT_LE(b.max_continuation_gap, 1e-12);
    // state 0 continues at every k >= 1: recompute with plain arithmetic
    double w = 0.0;
    for (int k = 1; k <= 3; ++k) {
        w = 2.0 + 0.6 * w + 0.4 * 5.0;
        EXPECT_NEAR(sol.surface[static_cast<std::size_t>(k)](0), w, 1e-13);
    }
}

TEST(CheckSupermartingale, DetectsTamperedSurface) {
    const MarkovModel m = chain_a();
    const RewardSpec r = chain_a_rewards(m);
    FiniteHorizonSolution sol = solve_finite_horizon(m, r, 3);
    sol.surface[2](0) += 0.5;
    EXPECT_FALSE(check_supermartingale(m, r, sol).ok);
}

TEST(BFamily, SingleSetIsWholeSpace) {
    const MarkovModel m = chain_a();
    const RewardSpec r = chain_a_rewards(m);
    const TailReport rep = b_family_diagnostics(m, r, 3, {Region::all(2)}, Region::all(2));
    ASSERT_EQ(rep.gamma.size(), 1u);
    EXPECT_EQ(rep.gamma[0], Vector::Ones(2));
    EXPECT_DOUBLE_EQ(rep.b1_sum, 5.0);
    EXPECT_DOUBLE_EQ(rep.shell_max_abs_g[0], 5.0);
}

TEST(BFamily, ChainANested) {
    const MarkovModel m = chain_a();
    const RewardSpec r = chain_a_rewards(m);
    const Region k1 = Region::from_indices(2, std::vector<StateIndex>{0});
    const TailReport rep = b_family_diagnostics(m, r, 2, {k1, Region::all(2)}, k1);
    EXPECT_NEAR(rep.gamma[0](0), 0.36, 1e-15);
    EXPECT_NEAR(rep.gamma[1](0), 1.0, 1e-15);
    const auto it = std::find(rep.n_grid.begin(), rep.n_grid.end(), 5.0);
    ASSERT_NE(it, rep.n_grid.end());
    EXPECT_EQ(rep.a[static_cast<std::size_t>(it - rep.n_grid.begin())], 0.0);
    EXPECT_NEAR(rep.zeta_tail[0], 3.2, 1e-12);  // n = 0 on the probe {0}
}

TEST(BFamily, RejectsBadNesting) {
    const MarkovModel m = testing::chain_b();
    const RewardSpec r = make_rewards(m, Vector::Constant(5, -1.0), Vector::LinSpaced(5, 0.0, 4.0));
    const Region a = Region::from_indices(5, std::vector<StateIndex>{0, 1});
    const Region b = Region::from_indices(5, std::vector<StateIndex>{0});
    EXPECT_ERROR_CODE(b_family_diagnostics(m, r, 2, {a, b, Region::all(5)}, b), ErrorCode::BadNesting);
    EXPECT_ERROR_CODE(b_family_diagnostics(m, r, 2, {b, a}, b), ErrorCode::BadNesting);
    EXPECT_ERROR_CODE(b_family_diagnostics(m, r, 2, {b, Region::all(5)}, a), ErrorCode::BadNesting);
}

TEST(BFamily, MonotoneTailsAndDominations) {
    for (const auto& inst : testing::random_corpus(20, 3, 6, 36)) {
        const std::size_t n = inst.model.size();
        Matrix coords(static_cast<Eigen::Index>(n), 1);
        for (std::size_t i = 0; i < n; ++i) coords(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
        const MarkovModel m = build_dtmc(testing::state_names(n), inst.model.kernel(), 1.0, coords);
        const RewardSpec r = make_rewards(m, inst.rewards.f, inst.rewards.g);
        std::vector<Region> sets;
        for (std::size_t i = 1; i <= n; ++i) {
            Region s(n);
            for (StateIndex x = 0; x < i; ++x) s.insert(x);
            sets.push_back(s);
        }
        const TailReport rep = b_family_diagnostics(m, r, 4, sets, sets[0]);
        for (std::size_t i = 0; i < rep.n_grid.size(); ++i) {
            EXPECT_GE(rep.zeta_tail[i], 0.0);
            EXPECT_GE(rep.a[i], 0.0);
            EXPECT_LE(rep.a[i], rep.zeta_tail[i] + 1e-12);
            EXPECT_LE(rep.zeta_tail[i], rep.b1_tail[i] + 1e-12);
            EXPECT_LE(rep.zeta_tail[i], rep.b2_tail[i] + 1e-12);
            if (i > 0) {
                EXPECT_LE(rep.zeta_tail[i], rep.zeta_tail[i - 1] + 1e-12);
                EXPECT_LE(rep.a[i], rep.a[i - 1] + 1e-12);
                EXPECT_LE(rep.b1_tail[i], rep.b1_tail[i - 1] + 1e-12);
                EXPECT_LE(rep.b2_tail[i], rep.b2_tail[i - 1] + 1e-12);
            }
            for (std::size_t j = 1; j < rep.R_grid.size(); ++j) EXPECT_LE(rep.b[i][j], rep.b[i][j - 1] + 1e-12);
            for (std::size_t j = 0; j < rep.R_grid.size(); ++j) {
                EXPECT_GE(rep.b[i][j], 0.0);
                if (i > 0) EXPECT_GE(rep.b[i][j], rep.b[i - 1][j] - 1e-12);
            }
        }
        for (std::size_t j = 1; j < rep.b3_tail.size(); ++j) EXPECT_LE(rep.b3_tail[j], rep.b3_tail[j - 1] + 1e-12);
        EXPECT_GE(rep.b3_tail.back(), 0.0);
    }
}

TEST(Helpers, StayProbabilityAndMaxPayoff) {
    const MarkovModel m = chain_a();
    const Region k1 = Region::from_indices(2, std::vector<StateIndex>{0});
    const Vector stay = stay_probability(m, k1, 3);
    EXPECT_NEAR(stay(0), 0.216, 1e-15);
    EXPECT_EQ(stay(1), 0.0);
    const Vector best = max_expected_payoff(m, Vector{{0.0, 1.0}}, 2);
    EXPECT_NEAR(best(0), 0.64, 1e-15);
    EXPECT_NEAR(best(1), 1.0, 1e-15);
}

}  // namespace
}  // namespace ergostop
