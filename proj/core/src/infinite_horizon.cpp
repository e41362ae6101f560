#include "ergostop/infinite_horizon.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "ergostop/errors.hpp"

namespace ergostop {

namespace {

Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

// dt f + P v, with -inf wherever v = -inf is reachable in one step.
Vector continuation(const MarkovModel& model, const Vector& running_dt, const Vector& v) {
    const std::size_t n = model.size();
    const Matrix& p = model.kernel();
    Vector out(ix(n));
    for (std::size_t x = 0; x < n; ++x) {
        double acc = 0.0;
        bool stranded = false;
        for (std::size_t y = 0; y < n; ++y) {
            const double pxy = p(ix(x), ix(y));
            if (pxy <= 0.0) continue;
            if (std::isinf(v(ix(y))) && v(ix(y)) < 0.0) {
                stranded = true;
                break;
            }
            acc += pxy * v(ix(y));
        }
        out(ix(x)) = stranded ? kMinusInfinity : running_dt(ix(x)) + acc;
    }
    return out;
}

double scale_of(const Vector& v) {
    double s = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (std::isfinite(v(i))) s = std::max(s, std::abs(v(i)));
    return s;
}

// Zero drift is admitted for the auxiliary problems where the running reward is
// centred exactly (delta = 1); the value is still finite there.
void check_drift(const Vector& running, double mu_running, bool allow_zero) {
    const double slack = allow_zero ? 1e-12 * std::max(1.0, running.cwiseAbs().maxCoeff()) : 0.0;
    const bool bad = allow_zero ? mu_running > slack : mu_running >= 0.0;
    if (bad) {
        std::ostringstream os;
        os.precision(17);
        os << "mu(running reward) = " << mu_running << " is not negative";
        fail(ErrorCode::DriftNotNegative, os.str());
    }
}

}  // namespace

Vector region_value(const MarkovModel& model, const Vector& running, const Vector& terminal,
                    const Region& region) {
    model.check_dimension(static_cast<std::size_t>(running.size()), "running reward");
    model.check_dimension(static_cast<std::size_t>(terminal.size()), "terminal reward");
    model.check_dimension(region.universe(), "region");
    const std::size_t n = model.size();
    Vector v = Vector::Constant(ix(n), kMinusInfinity);
    if (region.empty()) return v;

    const Region sure = states_hitting_surely(model, region);
    std::vector<StateIndex> inside, free;
    for (std::size_t x = 0; x < n; ++x) {
        if (region.contains(x)) {
            inside.push_back(x);
            v(ix(x)) = terminal(ix(x));
        } else if (sure.contains(x)) {
            free.push_back(x);
        }
    }
    if (free.empty()) return v;

    const Matrix& p = model.kernel();
    const auto m = ix(free.size());
    Matrix a = Matrix::Identity(m, m);
    Vector b(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const StateIndex x = free[static_cast<std::size_t>(i)];
        double rhs = model.dt() * running(ix(x));
        for (StateIndex s : inside) rhs += p(ix(x), ix(s)) * terminal(ix(s));
        b(i) = rhs;
        for (Eigen::Index j = 0; j < m; ++j) a(i, j) -= p(ix(x), ix(free[static_cast<std::size_t>(j)]));
    }
    const auto lu = a.partialPivLu();
    Vector sol = lu.solve(b);
    sol += lu.solve(b - a * sol);
    for (Eigen::Index i = 0; i < m; ++i) v(ix(free[static_cast<std::size_t>(i)])) = sol(i);
    return v;
}

Vector region_value(const MarkovModel& model, const RewardSpec& rewards, const Region& region) {
    return region_value(model, rewards.f, rewards.g, region);
}

Vector mean_hitting_time(const MarkovModel& model, const Region& region) {
    const std::size_t n = model.size();
    const Vector ones = Vector::Ones(ix(n));
    // Hitting time = value of the rule with running reward 1 and terminal 0.
    Vector t = region_value(model, ones, Vector::Zero(ix(n)), region);
    for (Eigen::Index i = 0; i < t.size(); ++i)
        if (std::isinf(t(i))) t(i) = std::numeric_limits<double>::infinity();
    return t;
}

InfiniteHorizonSolution solve_undiscounted_stopping(const MarkovModel& model, const Vector& running,
                                                    const Vector& terminal,
                                                    const SolverOptions& options) {
    model.check_dimension(static_cast<std::size_t>(running.size()), "running reward");
    model.check_dimension(static_cast<std::size_t>(terminal.size()), "terminal reward");
    const std::size_t n = model.size();
    const Vector running_dt = model.dt() * running;

    InfiniteHorizonSolution sol;
    sol.terminal = terminal;
    sol.tie_tolerance = options.tie_tolerance;

    // Monotone value iteration from w^0 = g: w^k = w_{k dt} increases to w.
    Vector w = terminal;
    for (std::size_t it = 0; it < options.max_value_iterations; ++it) {
        const Vector next = terminal.cwiseMax(running_dt + model.kernel() * w);
        const Vector step = next - w;
        if (step.minCoeff() < -1e-12 * scale_of(w)) sol.iterates_monotone = false;
        w = next;
        ++sol.value_iterations;
        if (step.cwiseAbs().maxCoeff() < options.tol) break;
    }
    const Vector vi = w;

    Region region(n);
    for (std::size_t x = 0; x < n; ++x)
        if (terminal(ix(x)) >= w(ix(x)) - options.tie_tolerance) region.insert(x);
    if (region.empty()) {
        Eigen::Index best = 0;
        (terminal - w).maxCoeff(&best);
        region.insert(static_cast<std::size_t>(best));
    }

    // Policy iteration; an action changes only on strict improvement.
    Vector v = region_value(model, running, terminal, region);
    for (std::size_t it = 0; it < options.max_policy_iterations; ++it) {
        const Vector cont = continuation(model, running_dt, v);
        Region next = region;
        bool changed = false;
        for (std::size_t x = 0; x < n; ++x) {
            const double tol = options.tie_tolerance;
            if (region.contains(x) && cont(ix(x)) > terminal(ix(x)) + tol) {
                next.erase(x);
                changed = true;
            } else if (!region.contains(x) && terminal(ix(x)) > cont(ix(x)) + tol) {
                next.insert(x);
                changed = true;
            }
        }
        ++sol.policy_iterations;
        if (!changed || next.empty()) break;
        region = std::move(next);
        v = region_value(model, running, terminal, region);
    }

    // Stop wherever stopping is optimal, which yields the earliest optimal rule.
    Region stop(n);
    for (std::size_t x = 0; x < n; ++x)
        if (terminal(ix(x)) >= v(ix(x)) - options.tie_tolerance) stop.insert(x);
    if (!stop.empty() && stop != region) {
        region = stop;
        v = region_value(model, running, terminal, region);
    }

    sol.w = v;
    sol.region = region;
    const Vector bellman = terminal.cwiseMax(continuation(model, running_dt, v));
    double residual = 0.0;
    bool finite = true;
    for (std::size_t x = 0; x < n; ++x) {
        if (!std::isfinite(v(ix(x)))) {
            finite = false;
            continue;
        }
        residual = std::max(residual, std::abs(v(ix(x)) - bellman(ix(x))));
    }
    sol.fixed_point_residual = finite ? residual : std::numeric_limits<double>::infinity();
    sol.value_iteration_gap = finite ? (vi - v).maxCoeff() : std::numeric_limits<double>::infinity();
    sol.certified = finite && sol.fixed_point_residual <= options.certify_tolerance &&
                    sol.value_iteration_gap <= options.agreement_tolerance;
    sol.expected_tau = mean_hitting_time(model, region);
    return sol;
}

InfiniteHorizonSolution solve_infinite_horizon(const MarkovModel& model, const RewardSpec& rewards,
                                               const SolverOptions& options) {
    model.check_dimension(static_cast<std::size_t>(rewards.f.size()), "f");
    model.check_dimension(static_cast<std::size_t>(rewards.g.size()), "g");
    const double mu_f = stationary_distribution(model).integrate(rewards.f);
    check_drift(rewards.f, mu_f, false);
    return solve_undiscounted_stopping(model, rewards.f, rewards.g, options);
}

void require_certified(const InfiniteHorizonSolution& solution) {
    if (solution.certified) return;
    std::ostringstream os;
    os.precision(3);
    os << "fixed-point residual " << solution.fixed_point_residual << ", value-iteration gap "
       << solution.value_iteration_gap;
    fail(ErrorCode::NotCertified, os.str());
}

RegionOracleResult brute_force_region_oracle(const MarkovModel& model, const RewardSpec& rewards,
                                             double tol) {
    const std::size_t n = model.size();
    if (n > kOracleMaxStates) {
        std::ostringstream os;
        os << n << " states exceed the enumeration cap of " << kOracleMaxStates;
        fail(ErrorCode::TooManyStates, os.str());
    }
    const std::size_t total = std::size_t{1} << n;
    std::vector<Vector> values;
    std::vector<Region> regions;
    values.reserve(total - 1);
    regions.reserve(total - 1);

    RegionOracleResult out;
    out.w = Vector::Constant(ix(n), kMinusInfinity);
    for (std::size_t mask = 1; mask < total; ++mask) {
        Region r(n);
        for (std::size_t x = 0; x < n; ++x)
            if (mask & (std::size_t{1} << x)) r.insert(x);
        Vector v = region_value(model, rewards, r);
        out.w = out.w.cwiseMax(v);
        values.push_back(std::move(v));
        regions.push_back(std::move(r));
    }

    for (std::size_t i = 0; i < regions.size(); ++i) {
        bool optimal = true;
        for (std::size_t x = 0; x < n && optimal; ++x) {
            const double best = out.w(ix(x));
            const double got = values[i](ix(x));
            if (!(got >= best - tol * std::max(1.0, std::abs(best)))) optimal = false;
        }
        if (optimal) out.optimal_regions.push_back(regions[i]);
    }
    if (!out.optimal_regions.empty()) {
        out.smallest_time_region = *std::max_element(
            out.optimal_regions.begin(), out.optimal_regions.end(),
            [](const Region& a, const Region& b) { return a.count() < b.count(); });
    }
    return out;
}

Region stopping_rule_eps(const InfiniteHorizonSolution& solution, double eps) {
    if (!(eps >= 0.0)) fail(ErrorCode::InvalidArgument, "eps must be nonnegative");
    const auto n = static_cast<std::size_t>(solution.w.size());
    Region r(n);
    for (std::size_t x = 0; x < n; ++x)
        if (solution.w(ix(x)) <= solution.terminal(ix(x)) + eps + solution.tie_tolerance) r.insert(x);
    return r;
}

Vector default_d(const RewardSpec& rewards, double delta) {
    if (!(delta > 0.0 && delta <= 1.0)) fail(ErrorCode::InvalidArgument, "delta must lie in (0, 1]");
    return Vector::Constant(rewards.f.size(), delta * rewards.drift());
}

Vector gamma_value(const MarkovModel& model, const Vector& f, const Vector& d,
                   const SolverOptions& options) {
    model.check_dimension(static_cast<std::size_t>(f.size()), "f");
    model.check_dimension(static_cast<std::size_t>(d.size()), "d");
    if ((d.array() >= 0.0).any()) fail(ErrorCode::InvalidArgument, "d(x) must be negative");
    const Distribution mu = stationary_distribution(model);
    const auto n = ix(model.size());

    // d(x) enters only through the start state: one stopping problem per distinct value.
    std::map<double, Vector> solved;
    Vector gamma(n);
    for (Eigen::Index x = 0; x < n; ++x) {
        auto it = solved.find(d(x));
        if (it == solved.end()) {
            const Vector running = (f.array() - d(x)).matrix();
            check_drift(running, mu.integrate(running), true);
            auto sol = solve_undiscounted_stopping(model, running, Vector::Zero(n), options);
            require_certified(sol);
            it = solved.emplace(d(x), std::move(sol.w)).first;
        }
        gamma(x) = it->second(x);
    }
    return gamma;
}

StoppingBound stopping_time_bound(const MarkovModel& model, const RewardSpec& rewards,
                                  InfiniteHorizonSolution& solution, const Vector& d,
                                  const SolverOptions& options) {
    require_certified(solution);
    if (!is_irreducible(model))
        fail(ErrorCode::NotIrreducible, "E{zeta+} via recurrence needs an irreducible chain");
    const auto n = ix(model.size());

    StoppingBound bound;
    bound.d = d;
    bound.gamma = gamma_value(model, rewards.f, d, options);
    // Recurrence: every state is visited, so zeta+ = max g+ almost surely.
    bound.zeta_plus = std::max(0.0, rewards.g.maxCoeff());
    bound.Z.resize(n);
    for (Eigen::Index x = 0; x < n; ++x)
        bound.Z(x) = (bound.gamma(x) + bound.zeta_plus - rewards.g(x) + 1.0) / (-d(x));
    bound.expected_tau = mean_hitting_time(model, solution.region);

    bound.holds = true;
    for (Eigen::Index x = 0; x < n; ++x) {
        const double slack = 1e-9 * std::max(1.0, std::abs(bound.Z(x)));
        if (!(bound.expected_tau(x) <= bound.Z(x) + slack)) {
            std::ostringstream os;
            os << "E[tau*] = " << bound.expected_tau(x) << " exceeds Z = " << bound.Z(x)
               << " at state " << x;
            fail(ErrorCode::BoundViolated, os.str());
        }
    }
    solution.gamma = bound.gamma;
    solution.d = bound.d;
    solution.Z = bound.Z;
    solution.expected_tau = bound.expected_tau;
    return bound;
}

ConditionSReport check_condition_S(const MarkovModel& model, const RewardSpec& rewards,
                                   const ZeroPotential& potential, double delta,
                                   const SolverOptions& options) {
    if (!(delta > 0.0 && delta <= 1.0)) fail(ErrorCode::InvalidArgument, "delta must lie in (0, 1]");
    const double mu_f = stationary_distribution(model).integrate(rewards.f);
    check_drift(rewards.f, mu_f, false);
    model.check_dimension(static_cast<std::size_t>(potential.q.size()), "q");
    const auto n = ix(model.size());

    ConditionSReport report;
    report.delta = delta;
    const Vector running = Vector::Constant(n, (1.0 - delta) * mu_f);
    auto bar = solve_undiscounted_stopping(model, running, -potential.q, options);
    require_certified(bar);
    report.bar_gamma = bar.w;
    report.gamma = gamma_value(model, rewards.f, Vector::Constant(n, delta * mu_f), options);
    report.identity_gap = (report.bar_gamma - (report.gamma - potential.q)).cwiseAbs().maxCoeff();
    report.holds = report.bar_gamma.allFinite() && mu_f < 0.0 && report.identity_gap <= 1e-8;
    return report;
}

CompactifiedReward compactify_running_reward(const MarkovModel& model, const Vector& f,
                                             const Distribution& mu, StateIndex center) {
    if (!model.has_coords()) fail(ErrorCode::NoCoords, "compactification needs state coordinates");
    model.check_dimension(static_cast<std::size_t>(f.size()), "f");
    model.check_dimension(mu.size(), "mu");
    if (center >= model.size()) fail(ErrorCode::InvalidArgument, "center state out of range");
    const double mu_f = mu.integrate(f);
    if (!(mu_f < 0.0)) fail(ErrorCode::DriftNotNegative, "compactification needs mu(f) < 0");
    const std::size_t n = model.size();

    std::vector<double> radius(n);
    double reach = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
        radius[x] = model.distance(x, center);
        reach = std::max(reach, radius[x]);
    }
    auto ball = [&](double r) {
        Region b(n);
        for (std::size_t x = 0; x < n; ++x)
            if (radius[x] <= r) b.insert(x);
        return b;
    };

    CompactifiedReward out;
    out.center = center;
    out.mu_f = mu_f;
    const int max_radius = static_cast<int>(std::ceil(reach)) + 1;
    bool found = false;
    for (int r = 1; r <= max_radius && !found; ++r) {
        double tail = 0.0;
        for (std::size_t x = 0; x < n; ++x)
            if (radius[x] > r) tail += std::abs(f(ix(x))) * mu[x];
        if (tail < -mu_f / 4.0) {
            out.N = r;
            out.tail_integral = tail;
            found = true;
        }
    }
    if (!found) fail(ErrorCode::NoValidN, "no ball radius meets the tail condition");

    out.ball_N = ball(out.N);
    out.ball_N1 = ball(out.N + 1);
    out.z.resize(ix(n));
    for (std::size_t x = 0; x < n; ++x) {
        // Distance to the Euclidean ball of radius N around the center.
        const double rho = std::max(0.0, radius[x] - out.N);
        out.z(ix(x)) = 1.0 - std::min(rho, 1.0);
    }
    out.f_hat = out.z.cwiseProduct(f);
    out.f_bar = f.cwiseMax(out.f_hat);
    out.mu_f_bar = mu.integrate(out.f_bar);

    for (std::size_t x = 0; x < n; ++x) {
        const double fb = out.f_bar(ix(x));
        const bool outside = !out.ball_N1.contains(x);
        if (fb < f(ix(x)) || (outside && fb < 0.0) || (fb <= out.mu_f_bar && outside))
            fail(ErrorCode::BoundViolated, "compactified reward violates its pointwise properties");
    }
    if (out.mu_f_bar > mu_f / 2.0)
        fail(ErrorCode::BoundViolated, "mu(f_bar) exceeds mu(f) / 2");
    return out;
}

}  // namespace ergostop
