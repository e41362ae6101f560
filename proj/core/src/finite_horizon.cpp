#include "ergostop/finite_horizon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ergostop/errors.hpp"

namespace ergostop {

namespace {

Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

void check_rewards(const MarkovModel& model, const RewardSpec& rewards) {
    model.check_dimension(static_cast<std::size_t>(rewards.f.size()), "f");
    model.check_dimension(static_cast<std::size_t>(rewards.g.size()), "g");
}

FiniteHorizonSolution backward_induction(const MarkovModel& model, const Vector& f,
                                         const Vector& terminal, std::size_t horizon_steps,
                                         double tie_tolerance) {
    if (!(tie_tolerance >= 0.0)) fail(ErrorCode::InvalidArgument, "tie tolerance must be >= 0");
    FiniteHorizonSolution sol;
    sol.horizon_steps = horizon_steps;
    sol.dt = model.dt();
    sol.terminal = terminal;
    sol.tie_tolerance = tie_tolerance;
    sol.surface.reserve(horizon_steps + 1);
    sol.surface.push_back(terminal);
    const Vector running = model.dt() * f;
    for (std::size_t k = 0; k < horizon_steps; ++k) {
        const Vector cont = running + model.kernel() * sol.surface.back();
        sol.surface.push_back(terminal.cwiseMax(cont));
    }
    sol.rule.reserve(horizon_steps + 1);
    for (const Vector& w : sol.surface) {
        Region stop(model.size());
        for (std::size_t x = 0; x < model.size(); ++x)
            if (terminal(ix(x)) >= w(ix(x)) - tie_tolerance) stop.insert(x);
        sol.rule.push_back(std::move(stop));
    }
    return sol;
}

std::vector<double> distinct_sorted(const Vector& v) {
    std::vector<double> out(v.data(), v.data() + v.size());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void check_nesting(const MarkovModel& model, const std::vector<Region>& sets, const Region& probe) {
    if (sets.empty()) fail(ErrorCode::BadNesting, "nested family is empty");
    for (std::size_t i = 0; i < sets.size(); ++i) {
        if (sets[i].universe() != model.size())
            fail(ErrorCode::BadNesting, "nested set has the wrong universe");
        if (i > 0 && !sets[i - 1].is_subset_of(sets[i])) {
            std::ostringstream os;
            os << "set " << i - 1 << " is not contained in set " << i;
            fail(ErrorCode::BadNesting, os.str());
        }
    }
    if (sets.back().count() != model.size())
        fail(ErrorCode::BadNesting, "nested family does not cover the state space");
    if (probe.universe() != model.size() || probe.empty())
        fail(ErrorCode::BadNesting, "probe ball must be a nonempty subset of the states");
    if (!probe.is_subset_of(sets.front()))
        fail(ErrorCode::BadNesting, "probe ball is not contained in the first nested set");
}

double sup_over(const Vector& v, const Region& set) {
    double best = 0.0;
    bool any = false;
    for (StateIndex y : set.members()) {
        best = any ? std::max(best, v(ix(y))) : v(ix(y));
        any = true;
    }
    return best;
}

double max_abs_over(const Vector& g, const Region& set) {
    double best = 0.0;
    for (StateIndex y : set.members()) best = std::max(best, std::abs(g(ix(y))));
    return best;
}

}  // namespace

FiniteHorizonSolution solve_finite_horizon(const MarkovModel& model, const RewardSpec& rewards,
                                           std::size_t horizon_steps, double tie_tolerance) {
    check_rewards(model, rewards);
    return backward_induction(model, rewards.f, rewards.g, horizon_steps, tie_tolerance);
}

FiniteHorizonSolution solve_truncated(const MarkovModel& model, const RewardSpec& rewards,
                                      std::size_t horizon_steps, double n, double tie_tolerance) {
    check_rewards(model, rewards);
    auto sol = backward_induction(model, rewards.f, clamp_reward(rewards.g, n), horizon_steps,
                                  tie_tolerance);
    sol.truncation_level = n;
    return sol;
}

Vector running_max_expectation(const MarkovModel& model, const Vector& level, std::size_t steps,
                               const std::function<double(double)>& phi, std::size_t cap) {
    model.check_dimension(static_cast<std::size_t>(level.size()), "level");
    const std::size_t n = model.size();
    const std::vector<double> levels = distinct_sorted(level);
    const std::size_t m = levels.size();
    if (n * m > cap) {
        std::ostringstream os;
        os << "running-max augmentation needs " << n * m << " states (cap " << cap << ")";
        fail(ErrorCode::AugmentationTooLarge, os.str());
    }
    std::vector<std::size_t> level_of(n);
    for (std::size_t x = 0; x < n; ++x)
        level_of[x] = static_cast<std::size_t>(
            std::lower_bound(levels.begin(), levels.end(), level(ix(x))) - levels.begin());

    // u(x, j): expectation of phi(final max) given state x and current max level j.
    Matrix u(ix(n), ix(m));
    for (std::size_t j = 0; j < m; ++j) u.col(ix(j)).setConstant(phi(levels[j]));
    Matrix next(ix(n), ix(m));
    Vector shifted(ix(n));
    for (std::size_t k = 0; k < steps; ++k) {
        for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t y = 0; y < n; ++y) shifted(ix(y)) = u(ix(y), ix(std::max(j, level_of[y])));
            next.col(ix(j)) = model.kernel() * shifted;
        }
        u.swap(next);
    }
    Vector out(ix(n));
    for (std::size_t x = 0; x < n; ++x) out(ix(x)) = u(ix(x), ix(level_of[x]));
    return out;
}

Vector truncation_gap_bounds(const MarkovModel& model, const RewardSpec& rewards,
                             std::size_t horizon_steps, double n, std::size_t cap) {
    check_rewards(model, rewards);
    if (!(n >= 0.0)) fail(ErrorCode::InvalidArgument, "truncation level must be nonnegative");
    return running_max_expectation(model, rewards.g.cwiseAbs(), horizon_steps,
                                   [n](double z) { return z > n ? z : 0.0; }, cap);
}

double truncation_gap_bound(const MarkovModel& model, const RewardSpec& rewards,
                            std::size_t horizon_steps, double n, StateIndex start,
                            std::size_t cap) {
    if (start >= model.size()) fail(ErrorCode::InvalidArgument, "start state out of range");
    return truncation_gap_bounds(model, rewards, horizon_steps, n, cap)(ix(start));
}

SupermartingaleReport check_supermartingale(const MarkovModel& model, const RewardSpec& rewards,
                                            const FiniteHorizonSolution& solution, double tol) {
    check_rewards(model, rewards);
    SupermartingaleReport report;
    report.max_residual = -std::numeric_limits<double>::infinity();
    const Matrix& p = model.kernel();
    const std::size_t n = model.size();
    for (std::size_t k = 0; k + 1 < solution.surface.size(); ++k) {
        const Vector& now = solution.surface[k];
        const Vector& after = solution.surface[k + 1];
        for (std::size_t x = 0; x < n; ++x) {
            double expect = 0.0;
            for (std::size_t y = 0; y < n; ++y) expect += p(ix(x), ix(y)) * now(ix(y));
            const double residual = model.dt() * rewards.f(ix(x)) + expect - after(ix(x));
            report.max_residual = std::max(report.max_residual, residual);
            if (!solution.rule[k + 1].contains(x))
                report.max_continuation_gap = std::max(report.max_continuation_gap, std::abs(residual));
        }
    }
    if (solution.surface.size() < 2) report.max_residual = 0.0;
    report.ok = report.max_residual <= tol && report.max_continuation_gap <= tol;
    return report;
}

Vector stay_probability(const MarkovModel& model, const Region& set, std::size_t steps) {
    model.check_dimension(set.universe(), "set");
    const auto n = ix(model.size());
    Vector indicator = Vector::Zero(n);
    for (StateIndex x : set.members()) indicator(ix(x)) = 1.0;
    Vector v = indicator;
    for (std::size_t k = 0; k < steps; ++k) v = indicator.cwiseProduct(model.kernel() * v);
    return v;
}

Vector max_expected_payoff(const MarkovModel& model, const Vector& payoff, std::size_t steps) {
    model.check_dimension(static_cast<std::size_t>(payoff.size()), "payoff");
    Vector u = payoff;
    for (std::size_t k = 0; k < steps; ++k) u = payoff.cwiseMax(model.kernel() * u);
    return u;
}

TailReport b_family_diagnostics(const MarkovModel& model, const RewardSpec& rewards,
                                std::size_t horizon_steps, const std::vector<Region>& nested_sets,
                                const Region& probe_ball, TailOptions options) {
    check_rewards(model, rewards);
    check_nesting(model, nested_sets, probe_ball);
    const std::size_t n_states = model.size();
    const Vector abs_g = rewards.g.cwiseAbs();

    TailReport report;
    if (options.n_grid.empty()) {
        options.n_grid.push_back(0.0);
        for (double v : distinct_sorted(abs_g)) options.n_grid.push_back(v);
    }
    std::sort(options.n_grid.begin(), options.n_grid.end());
    report.n_grid = options.n_grid;

    for (double n : report.n_grid) {
        const Vector tail = running_max_expectation(
            model, abs_g, horizon_steps, [n](double z) { return z > n ? z : 0.0; },
            options.augmentation_cap);
        report.zeta_tail.push_back(sup_over(tail, probe_ball));

        Vector payoff(abs_g.size());
        for (Eigen::Index i = 0; i < abs_g.size(); ++i) payoff(i) = abs_g(i) > n ? abs_g(i) : 0.0;
        report.a.push_back(sup_over(max_expected_payoff(model, payoff, horizon_steps), probe_ball));
    }

    if (model.has_coords()) {
        if (options.R_grid.empty()) {
            double diameter = 0.0;
            for (std::size_t x = 0; x < n_states; ++x)
                for (std::size_t y = 0; y < n_states; ++y)
                    diameter = std::max(diameter, model.distance(x, y));
            for (double r = 0.0; r <= std::ceil(diameter) + 1.0; r += 1.0) options.R_grid.push_back(r);
        }
        std::sort(options.R_grid.begin(), options.R_grid.end());
        report.R_grid = options.R_grid;

        // Payoffs depend on the start y through rho(y, .); solve per probe state.
        auto sup_distant = [&](double radius, auto&& weight) {
            double best = 0.0;
            for (StateIndex y : probe_ball.members()) {
                Vector payoff(ix(n_states));
                for (std::size_t z = 0; z < n_states; ++z)
                    payoff(ix(z)) = model.distance(y, z) >= radius ? weight(abs_g(ix(z))) : 0.0;
                best = std::max(best, max_expected_payoff(model, payoff, horizon_steps)(ix(y)));
            }
            return best;
        };
        for (double n : report.n_grid) {
            std::vector<double> row;
            for (double radius : report.R_grid)
                row.push_back(sup_distant(radius, [n](double a) { return a <= n ? a : 0.0; }));
            report.b.push_back(std::move(row));
        }
        for (double radius : report.R_grid)
            report.distant_reward.push_back(sup_distant(radius, [](double a) { return a; }));

        if (options.N_grid.empty()) {
            std::vector<double> norms;
            for (std::size_t x = 0; x < n_states; ++x) norms.push_back(model.norm(x));
            std::sort(norms.begin(), norms.end());
            norms.erase(std::unique(norms.begin(), norms.end()), norms.end());
            options.N_grid.push_back(0.0);
            options.N_grid.insert(options.N_grid.end(), norms.begin(), norms.end());
        }
        std::sort(options.N_grid.begin(), options.N_grid.end());
        report.N_grid = options.N_grid;

        Vector norm(ix(n_states));
        for (std::size_t x = 0; x < n_states; ++x) norm(ix(x)) = model.norm(x);
        auto g_star = [&](double r) {
            double best = 0.0;
            for (std::size_t y = 0; y < n_states; ++y)
                if (norm(ix(y)) <= r) best = std::max(best, abs_g(ix(y)));
            return best;
        };
        for (double big_n : report.N_grid) {
            const Vector tail = running_max_expectation(
                model, norm, horizon_steps,
                [&](double xi) { return xi > big_n ? g_star(xi) : 0.0; }, options.augmentation_cap);
            report.b3_tail.push_back(sup_over(tail, probe_ball));
        }
    }

    const std::size_t m = nested_sets.size();
    Vector previous_gamma = Vector::Zero(ix(n_states));
    Region previous(n_states);
    for (std::size_t i = 0; i < m; ++i) {
        const Region& set = nested_sets[i];
        Vector gamma = stay_probability(model, set, horizon_steps);
        const double set_max = max_abs_over(rewards.g, set);
        report.set_max_abs_g.push_back(set_max);
        report.b1_terms.push_back(sup_over(gamma - previous_gamma, probe_ball) * set_max);

        Region shell(n_states);
        for (StateIndex x : set.members())
            if (!previous.contains(x)) shell.insert(x);
        const double shell_max = max_abs_over(rewards.g, shell);
        report.shell_max_abs_g.push_back(shell_max);
        double visit = 0.0;
        if (!shell.empty()) {
            const Vector avoid = stay_probability(model, shell.complement(), horizon_steps);
            visit = sup_over((Vector::Ones(ix(n_states)) - avoid).eval(), probe_ball);
        }
        report.b2_terms.push_back(shell_max * visit);

        report.gamma.push_back(gamma);
        previous_gamma = std::move(gamma);
        previous = set;
    }
    for (double t : report.b1_terms) report.b1_sum += t;
    for (double t : report.b2_terms) report.b2_sum += t;
    for (double n : report.n_grid) {
        double b1 = 0.0, b2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (report.set_max_abs_g[i] > n) b1 += report.b1_terms[i];
            if (report.shell_max_abs_g[i] > n) b2 += report.b2_terms[i];
        }
        report.b1_tail.push_back(b1);
        report.b2_tail.push_back(b2);
    }
    return report;
}

}  // namespace ergostop
