#include "ergostop/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ergostop/errors.hpp"
#include "ergostop/finite_horizon.hpp"
#include "ergostop/sampling.hpp"

namespace ergostop {

namespace {

Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

// Column statistics of a row-major n_rows x n_cols sample table, summed in row order.
std::vector<MeanSe> column_stats(const std::vector<double>& table, std::size_t n_rows,
                                 std::size_t n_cols) {
    std::vector<MeanSe> out(n_cols);
    for (std::size_t c = 0; c < n_cols; ++c) {
        // Welford: a constant column yields its value and zero spread exactly.
        double mean = 0.0, ss = 0.0;
        for (std::size_t r = 0; r < n_rows; ++r) {
            const double x = table[r * n_cols + c];
            const double delta = x - mean;
            mean += delta / static_cast<double>(r + 1);
            ss += delta * (x - mean);
        }
        const double var = n_rows > 1 ? std::max(0.0, ss) / static_cast<double>(n_rows - 1) : 0.0;
        out[c] = {mean, std::sqrt(var / static_cast<double>(n_rows))};
    }
    return out;
}

void check_common(const MarkovModel& model, const Region& region, StateIndex start,
                  const std::vector<std::size_t>& horizons, const McOptions& options) {
    model.check_dimension(region.universe(), "region");
    if (start >= model.size()) fail(ErrorCode::InvalidArgument, "start state out of range");
    if (options.n_paths == 0) fail(ErrorCode::InvalidArgument, "n_paths must be at least 1");
    if (horizons.empty()) fail(ErrorCode::InvalidArgument, "no horizons given");
    for (std::size_t i = 1; i < horizons.size(); ++i)
        if (horizons[i] <= horizons[i - 1])
            fail(ErrorCode::InvalidArgument, "horizons must be strictly increasing");
}

}  // namespace

std::string_view to_string(TrendVerdict verdict) noexcept {
    switch (verdict) {
    case TrendVerdict::Converged: return "Converged";
    case TrendVerdict::MinusInfinityTrend: return "MinusInfinityTrend";
    case TrendVerdict::Inconclusive: return "Inconclusive";
    }
    return "Unknown";
}

bool within_z(double a, double se_a, double b, double se_b) {
    const double se = std::sqrt(se_a * se_a + se_b * se_b);
    const double diff = std::abs(a - b);
    if (se == 0.0) return diff <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
    return diff <= kZThreshold * se;
}

FunctionalEstimate estimate_functional(const MarkovModel& model, const RewardSpec& rewards,
                                       const Region& region, StateIndex start,
                                       const std::vector<std::size_t>& horizon_steps,
                                       const McOptions& options) {
    check_common(model, region, start, horizon_steps, options);
    model.check_dimension(static_cast<std::size_t>(rewards.f.size()), "f");
    model.check_dimension(static_cast<std::size_t>(rewards.g.size()), "g");

    const std::size_t n_h = horizon_steps.size();
    const std::size_t last = horizon_steps.back();
    const double dt = model.dt();
    const TransitionSampler sampler(model);
    std::vector<double> table(options.n_paths * n_h);

    parallel_for_index(options.n_paths, options.workers, [&](std::size_t i) {
        PathStream stream(options.seed, i);
        double* row = table.data() + i * n_h;
        StateIndex x = start;
        double acc = 0.0;
        std::size_t h = 0;
        for (std::size_t k = 0;; ++k) {
            const bool hit = region.contains(x);
            while (h < n_h && (hit || horizon_steps[h] == k)) {
                row[h++] = acc + rewards.g(ix(x));
            }
            if (h == n_h || k == last) break;
            acc += dt * rewards.f(ix(x));
            x = sampler.next(x, stream);
        }
    });

    const auto stats = column_stats(table, options.n_paths, n_h);
    FunctionalEstimate out;
    for (std::size_t h = 0; h < n_h; ++h)
        out.horizons.push_back({horizon_steps[h], static_cast<double>(horizon_steps[h]) * dt,
                                stats[h].mean, stats[h].se});

    const std::size_t window = std::max<std::size_t>(1, (n_h + 3) / 4);
    out.liminf_window = out.limsup_window = out.horizons[n_h - window].mean;
    for (std::size_t h = n_h - window; h < n_h; ++h) {
        out.liminf_window = std::min(out.liminf_window, out.horizons[h].mean);
        out.limsup_window = std::max(out.limsup_window, out.horizons[h].mean);
    }

    if (n_h >= 2 && within_z(out.horizons[n_h - 1].mean, out.horizons[n_h - 1].std_error,
                             out.horizons[n_h - 2].mean, out.horizons[n_h - 2].std_error)) {
        out.verdict = TrendVerdict::Converged;
    } else if (n_h >= 2) {
        bool falling = true;
        for (std::size_t h = n_h / 2; h + 1 < n_h; ++h) {
            const auto& a = out.horizons[h];
            const auto& b = out.horizons[h + 1];
            const double se = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
            if (!(a.mean - b.mean > kZThreshold * se)) falling = false;
        }
        out.verdict = falling ? TrendVerdict::MinusInfinityTrend : TrendVerdict::Inconclusive;
    }
    return out;
}

ZetaTailEstimate estimate_zeta_plus_tail(const MarkovModel& model, const Vector& g, StateIndex start,
                                         std::size_t horizon_steps,
                                         const std::vector<double>& thresholds,
                                         const McOptions& options) {
    model.check_dimension(static_cast<std::size_t>(g.size()), "g");
    if (start >= model.size()) fail(ErrorCode::InvalidArgument, "start state out of range");
    if (options.n_paths == 0) fail(ErrorCode::InvalidArgument, "n_paths must be at least 1");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (thresholds[i] < 0.0) fail(ErrorCode::InvalidArgument, "thresholds must be nonnegative");
        if (i > 0 && thresholds[i] < thresholds[i - 1])
            fail(ErrorCode::InvalidArgument, "thresholds must be ascending");
    }

    const Vector g_plus = g.cwiseMax(0.0);
    const TransitionSampler sampler(model);
    std::vector<double> zeta(options.n_paths);
    parallel_for_index(options.n_paths, options.workers, [&](std::size_t i) {
        PathStream stream(options.seed, i);
        StateIndex x = start;
        double best = g_plus(ix(x));
        for (std::size_t k = 0; k < horizon_steps; ++k) {
            x = sampler.next(x, stream);
            best = std::max(best, g_plus(ix(x)));
        }
        zeta[i] = best;
    });

    ZetaTailEstimate out;
    out.horizon_steps = horizon_steps;
    out.thresholds = thresholds;
    const std::size_t n_t = thresholds.size();
    std::vector<double> table(options.n_paths * n_t);
    for (std::size_t i = 0; i < options.n_paths; ++i)
        for (std::size_t t = 0; t < n_t; ++t)
            table[i * n_t + t] = zeta[i] > thresholds[t] ? zeta[i] : 0.0;
    const auto stats = column_stats(table, options.n_paths, n_t);

    // Forward reachability from start.
    Region forward(model.size());
    {
        std::vector<StateIndex> stack{start};
        forward.insert(start);
        while (!stack.empty()) {
            const StateIndex u = stack.back();
            stack.pop_back();
            for (StateIndex v = 0; v < model.size(); ++v) {
                if (!forward.contains(v) && model.kernel()(ix(u), ix(v)) > kPositiveEntry) {
                    forward.insert(v);
                    stack.push_back(v);
                }
            }
        }
    }
    double reachable_max = 0.0;
    for (StateIndex v : forward.members()) reachable_max = std::max(reachable_max, g_plus(ix(v)));

    for (std::size_t t = 0; t < n_t; ++t) {
        const double n = thresholds[t];
        out.estimate.push_back(stats[t].mean);
        out.std_error.push_back(stats[t].se);
        out.exact_at_horizon.push_back(running_max_expectation(
            model, g_plus, horizon_steps, [n](double z) { return z > n ? z : 0.0; })(ix(start)));
        out.exact_limit.push_back(reachable_max > n ? reachable_max : 0.0);
    }
    return out;
}

TerminalGapEstimate terminal_truncation_gap(const MarkovModel& model, const RewardSpec& rewards,
                                            const Region& region, StateIndex start,
                                            const std::vector<std::size_t>& horizon_steps,
                                            const McOptions& options) {
    check_common(model, region, start, horizon_steps, options);
    model.check_dimension(static_cast<std::size_t>(rewards.f.size()), "f");
    model.check_dimension(static_cast<std::size_t>(rewards.g.size()), "g");
    if (!states_hitting_surely(model, region).contains(start))
        fail(ErrorCode::UnreachableRegion, "the region is not hit almost surely from the start state");

    const std::size_t n_h = horizon_steps.size();
    const double dt = model.dt();
    const TransitionSampler sampler(model);
    // Per path: uncapped value, then per horizon (gap, g- term).
    const std::size_t width = 1 + 2 * n_h;
    std::vector<double> table(options.n_paths * width);

    parallel_for_index(options.n_paths, options.workers, [&](std::size_t i) {
        PathStream stream(options.seed, i);
        double* row = table.data() + i * width;
        std::vector<double> capped(n_h);
        StateIndex x = start;
        double acc = 0.0;
        std::size_t h = 0;
        std::size_t k = 0;
        while (!region.contains(x)) {
            while (h < n_h && horizon_steps[h] == k) {
                capped[h] = acc + rewards.g(ix(x));
                row[1 + 2 * h + 1] = std::max(0.0, -rewards.g(ix(x)));
                ++h;
            }
            if (k >= options.max_steps)
                fail(ErrorCode::UnreachableRegion, "path exceeded the step cap before hitting");
            acc += dt * rewards.f(ix(x));
            x = sampler.next(x, stream);
            ++k;
        }
        const double uncapped = acc + rewards.g(ix(x));
        for (; h < n_h; ++h) {
            capped[h] = uncapped;
            row[1 + 2 * h + 1] = 0.0;
        }
        row[0] = uncapped;
        for (std::size_t j = 0; j < n_h; ++j) row[1 + 2 * j] = uncapped - capped[j];
    });

    const auto stats = column_stats(table, options.n_paths, width);
    TerminalGapEstimate out;
    out.horizon_steps = horizon_steps;
    out.uncapped_mean = stats[0].mean;
    out.uncapped_se = stats[0].se;
    for (std::size_t h = 0; h < n_h; ++h) {
        out.gap.push_back(stats[1 + 2 * h].mean);
        out.gap_se.push_back(stats[1 + 2 * h].se);
        out.g_minus_term.push_back(stats[2 + 2 * h].mean);
        out.g_minus_se.push_back(stats[2 + 2 * h].se);
    }
    out.pass = within_z(out.gap.back(), out.gap_se.back(), 0.0) &&
               within_z(out.g_minus_term.back(), out.g_minus_se.back(), 0.0);
    return out;
}

}  // namespace ergostop
