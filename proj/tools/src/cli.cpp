#include "cli.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "ergostop/ergodicity.hpp"
#include "ergostop/errors.hpp"
#include "ergostop/finite_horizon.hpp"
#include "ergostop/infinite_horizon.hpp"
#include "ergostop/model_io.hpp"
#include "ergostop/montecarlo.hpp"
#include "report.hpp"

#ifndef ERGOSTOP_VERSION
#define ERGOSTOP_VERSION "0.0.0"
#endif

namespace ergostop::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct Config {
    std::string command;
    std::string check;
    std::string model_path;
    std::optional<double> dt;
    std::optional<double> horizon;
    std::optional<double> truncate;
    double tol = 1e-10;
    double delta = 0.5;
    std::optional<double> eps;
    std::size_t paths = 100000;
    std::uint64_t seed = 20140101;
    std::size_t workers = 0;
    std::string out = "ergostop_out";
    std::string format = "csv";
    std::string region;
    std::string start;
    std::string center;
    std::vector<double> horizons;
    std::vector<double> thresholds;
};

template <class T>
json opt_json(const std::optional<T>& v) {
    return v ? json_number(*v) : json(nullptr);
}

json config_json(const Config& c) {
    json j;
    j["command"] = c.command;
    j["check"] = c.check.empty() ? json(nullptr) : json(c.check);
    j["model"] = c.model_path;
    j["dt"] = opt_json(c.dt);
    j["horizon"] = opt_json(c.horizon);
    j["truncate"] = opt_json(c.truncate);
    j["tol"] = c.tol;
    j["delta"] = c.delta;
    j["eps"] = opt_json(c.eps);
    j["paths"] = c.paths;
    j["seed"] = c.seed;
    j["workers"] = c.workers;
    j["out"] = c.out;
    j["format"] = c.format;
    j["region"] = c.region.empty() ? json(nullptr) : json(c.region);
    j["start"] = c.start.empty() ? json(nullptr) : json(c.start);
    j["center"] = c.center.empty() ? json(nullptr) : json(c.center);
    j["horizons"] = c.horizons;
    j["thresholds"] = c.thresholds;
    return j;
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open model file " + path);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        fail(ErrorCode::IoError, "SHA-256 digest failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i)
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return os.str();
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

std::size_t steps_of(double time, double dt, const std::string& what) {
    if (!(time >= 0.0) || !std::isfinite(time))
        fail(ErrorCode::InvalidArgument, what + " must be a nonnegative number");
    const double k = std::round(time / dt);
    if (std::abs(k * dt - time) > 1e-9 * std::max(1.0, time))
        fail(ErrorCode::InvalidArgument, what + " " + format_number(time) +
                                             " is not a multiple of dt " + format_number(dt));
    return static_cast<std::size_t>(k);
}

StateIndex parse_state(const MarkovModel& model, const std::string& token) {
    if (auto idx = model.index_of(token)) return *idx;
    std::size_t pos = 0;
    try {
        const unsigned long v = std::stoul(token, &pos);
        if (pos == token.size() && v < model.size()) return static_cast<StateIndex>(v);
    } catch (const std::exception&) {
    }
    fail(ErrorCode::InvalidArgument, "unknown state '" + token + "'");
}

Region parse_region(const MarkovModel& model, const std::string& text) {
    if (text.empty()) fail(ErrorCode::InvalidArgument, "--region is required");
    if (text == "all") return Region::all(model.size());
    Region region(model.size());
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (token.empty()) fail(ErrorCode::InvalidArgument, "empty state in --region");
        region.insert(parse_state(model, token));
    }
    return region;
}

json region_json(const MarkovModel& model, const Region& region) {
    json j = json::array();
    for (StateIndex x : region.members()) j.push_back(model.states()[x]);
    return j;
}

/// Wide per-state table to (state, quantity, value) rows.
Table long_table(const Table& wide, const std::string& name) {
    Table out{name, {"state", "quantity", "value"}, {}};
    for (const auto& row : wide.rows) {
        for (std::size_t c = 1; c < row.size(); ++c) {
            double v = 0.0;
            if (const auto* d = std::get_if<double>(&row[c])) v = *d;
            else if (const auto* b = std::get_if<bool>(&row[c])) v = *b ? 1.0 : 0.0;
            else if (const auto* i = std::get_if<std::int64_t>(&row[c])) v = static_cast<double>(*i);
            else continue;
            out.add({row[0], wide.columns[c], v});
        }
    }
    return out;
}

struct Session {
    Config cfg;
    fs::path dir;
    Format format = Format::Csv;
    std::ostream& out;
    std::vector<std::string> written;
    std::optional<ModelFile> model_file;

    const MarkovModel& model() {
        if (!model_file) {
            if (cfg.model_path.empty()) fail(ErrorCode::InvalidArgument, "--model is required");
            model_file = load_model(cfg.model_path, cfg.dt);
        }
        return model_file->model;
    }

    const Vector& f() {
        model();
        if (!model_file->f) fail(ErrorCode::InvalidArgument, "model file has no field 'f'");
        return *model_file->f;
    }

    const Vector& g() {
        model();
        if (!model_file->g) fail(ErrorCode::InvalidArgument, "model file has no field 'g'");
        return *model_file->g;
    }

    RewardSpec rewards() { return make_rewards(model(), f(), g()); }

    StateIndex start() { return cfg.start.empty() ? 0 : parse_state(model(), cfg.start); }

    void table(const Table& t) { written.push_back(emit_table(t, dir, format).filename().string()); }

    void record(const json& r, const std::string& name) {
        written.push_back(emit_record(r, dir, name).filename().string());
    }

    const std::string& state_name(StateIndex x) { return model().states()[x]; }
};

int cmd_solve(Session& s) {
    if (!s.cfg.horizon) fail(ErrorCode::InvalidArgument, "--horizon is required");
    const MarkovModel& model = s.model();
    const RewardSpec rewards = s.rewards();
    const std::size_t steps = steps_of(*s.cfg.horizon, model.dt(), "--horizon");
    const FiniteHorizonSolution sol = solve_finite_horizon(model, rewards, steps);

    Table surface{"surface", {"state", "k", "w_k", "stop_flag"}, {}};
    for (std::size_t k = 0; k <= steps; ++k)
        for (StateIndex x = 0; x < model.size(); ++x)
            surface.add({s.state_name(x), static_cast<std::int64_t>(k), sol.surface[k](ix(x)),
                         sol.rule[k].contains(x)});
    s.table(surface);

    const SupermartingaleReport sm = check_supermartingale(model, rewards, sol);
    json diag;
    diag["horizon"] = *s.cfg.horizon;
    diag["dt"] = model.dt();
    diag["steps"] = steps;
    diag["supermartingale"] = {{"max_residual", sm.max_residual},
                               {"max_continuation_gap", sm.max_continuation_gap},
                               {"ok", sm.ok}};

    Table values{"values", {"state", "w", "stop"}, {}};
    bool bound_ok = true;
    if (s.cfg.truncate) {
        const double n = *s.cfg.truncate;
        const FiniteHorizonSolution trunc = solve_truncated(model, rewards, steps, n);
        const Vector bound = truncation_gap_bounds(model, rewards, steps, n);
        values.columns = {"state", "w", "stop", "w_truncated", "abs_diff", "truncation_bound"};
        double max_diff = 0.0;
        for (StateIndex x = 0; x < model.size(); ++x) {
            const double diff = std::abs(sol.surface[steps](ix(x)) - trunc.surface[steps](ix(x)));
            max_diff = std::max(max_diff, diff);
            if (diff > bound(ix(x)) + 1e-9) bound_ok = false;
            values.add({s.state_name(x), sol.surface[steps](ix(x)), sol.rule[steps].contains(x),
                        trunc.surface[steps](ix(x)), diff, bound(ix(x))});
        }
        diag["truncation"] = {{"n", n}, {"max_abs_diff", max_diff}, {"bound_holds", bound_ok}};
    } else {
        for (StateIndex x = 0; x < model.size(); ++x)
            values.add({s.state_name(x), sol.surface[steps](ix(x)), sol.rule[steps].contains(x)});
    }
    s.table(values);
    s.table(long_table(values, "values_long"));
    s.record(diag, "diagnostics");

    s.out << "solved " << model.size() << " states over " << steps << " steps\n";
    if (!bound_ok) fail(ErrorCode::BoundViolated, "truncation gap exceeds its tail bound");
    return kExitOk;
}

json condition_s_json(const MarkovModel& model, const RewardSpec& rewards, double delta,
                      const SolverOptions& opts) {
    try {
        const ZeroPotential zp = zero_potential(model, rewards.f, stationary_distribution(model));
        const ConditionSReport rep = check_condition_S(model, rewards, zp, delta, opts);
        return {{"delta", delta}, {"identity_gap", json_number(rep.identity_gap)}, {"holds", rep.holds}};
    } catch (const Error& e) {
        return {{"delta", delta}, {"error", std::string(to_string(e.code()))}, {"message", e.what()}};
    }
}

int cmd_solve_infinite(Session& s) {
    const MarkovModel& model = s.model();
    const RewardSpec rewards = s.rewards();
    SolverOptions opts;
    opts.tol = s.cfg.tol;
    if (!(s.cfg.delta > 0.0 && s.cfg.delta <= 1.0))
        fail(ErrorCode::InvalidArgument, "--delta must lie in (0, 1]");

    InfiniteHorizonSolution sol = solve_infinite_horizon(model, rewards, opts);
    json cert;
    cert["certified"] = sol.certified;
    cert["fixed_point_residual"] = json_number(sol.fixed_point_residual);
    cert["value_iterations"] = sol.value_iterations;
    cert["policy_iterations"] = sol.policy_iterations;
    cert["value_iteration_gap"] = json_number(sol.value_iteration_gap);
    cert["iterates_monotone"] = sol.iterates_monotone;
    cert["mu_f"] = rewards.drift();
    cert["region"] = region_json(model, sol.region);

    std::optional<StoppingBound> bound;
    if (sol.certified) {
        if (is_irreducible(model)) {
            bound = stopping_time_bound(model, rewards, sol, default_d(rewards, s.cfg.delta), opts);
            cert["stopping_bound"] = {{"delta", s.cfg.delta},
                                      {"zeta_plus", bound->zeta_plus},
                                      {"holds", bound->holds}};
        } else {
            cert["stopping_bound"] = {{"skipped", "chain has transient states"}};
        }
        cert["condition_S"] = condition_s_json(model, rewards, s.cfg.delta, opts);
    }

    if (s.cfg.eps) {
        const Region r_eps = stopping_rule_eps(sol, *s.cfg.eps);
        const Vector v_eps = region_value(model, rewards, r_eps);
        cert["eps"] = {{"eps", *s.cfg.eps},
                       {"region", region_json(model, r_eps)},
                       {"min_value_minus_w", json_number((v_eps - sol.w).minCoeff())}};
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    Table table{"solution", {"state", "w", "stop", "gamma", "Z", "expected_tau"}, {}};
    for (StateIndex x = 0; x < model.size(); ++x)
        table.add({s.state_name(x), sol.w(ix(x)), sol.region.contains(x),
                   bound ? bound->gamma(ix(x)) : nan, bound ? bound->Z(ix(x)) : nan,
                   sol.expected_tau.size() ? sol.expected_tau(ix(x)) : nan});
    s.table(table);
    s.table(long_table(table, "solution_long"));
    s.record(cert, "certification");

    require_certified(sol);
    s.out << "certified; stop region size " << sol.region.count() << "\n";
    return kExitOk;
}

double value_diff(double a, double b) {
    if (a == b) return 0.0;  // also equal infinities
    return std::abs(a - b);
}

int cmd_oracle_check(Session& s) {
    const MarkovModel& model = s.model();
    const RewardSpec rewards = s.rewards();
    SolverOptions opts;
    opts.tol = s.cfg.tol;
    const RegionOracleResult oracle = brute_force_region_oracle(model, rewards);
    const InfiniteHorizonSolution sol = solve_infinite_horizon(model, rewards, opts);

    double max_diff = 0.0;
    Table table{"oracle", {"state", "w_solver", "w_oracle", "stop_solver", "stop_oracle"}, {}};
    for (StateIndex x = 0; x < model.size(); ++x) {
        max_diff = std::max(max_diff, value_diff(sol.w(ix(x)), oracle.w(ix(x))));
        table.add({s.state_name(x), sol.w(ix(x)), oracle.w(ix(x)), sol.region.contains(x),
                   oracle.smallest_time_region.contains(x)});
    }
    const bool same_region = sol.region == oracle.smallest_time_region;
    const bool agree = sol.certified && same_region && max_diff <= 1e-8;
    s.table(table);
    s.record({{"agree", agree},
              {"certified", sol.certified},
              {"max_abs_diff", json_number(max_diff)},
              {"tolerance", 1e-8},
              {"same_region", same_region},
              {"optimal_regions", oracle.optimal_regions.size()}},
             "oracle_check");

    if (agree) {
        s.out << "agree, max diff " << format_number(max_diff) << " <= 1e-08\n";
        return kExitOk;
    }
    s.out << "disagree, max diff " << format_number(max_diff)
          << (same_region ? "" : ", stop regions differ") << "\n";
    require_certified(sol);
    return kExitVerdict;
}

int cmd_diagnose(Session& s) {
    const MarkovModel& model = s.model();
    const std::string& check = s.cfg.check;
    if (check == "poisson") {
        const Distribution mu = stationary_distribution(model);
        const ZeroPotential zp = zero_potential(model, s.f(), mu);
        Table table{"potential", {"state", "mu", "q"}, {}};
        for (StateIndex x = 0; x < model.size(); ++x) table.add({s.state_name(x), mu[x], zp.q(ix(x))});
        s.table(table);
        s.table(long_table(table, "potential_long"));
        s.record({{"check", "poisson"},
                  {"mu_f", zp.mu_f},
                  {"residual", zp.residual},
                  {"centred", zp.centred}},
                 "diagnostic");
        s.out << "poisson residual " << format_number(zp.residual) << "\n";
        return kExitOk;
    }
    if (check == "tv") {
        const Distribution mu = stationary_distribution(model);
        const double max_time = s.cfg.horizon.value_or(64.0 * model.dt());
        std::vector<StateIndex> probes(model.size());
        for (StateIndex x = 0; x < model.size(); ++x) probes[x] = x;
        ErgodicProfile profile = tv_distance_curve(model, mu, probes, max_time);
        Table curve{"tv", {"state", "time", "tv"}, {}};
        for (std::size_t p = 0; p < probes.size(); ++p)
            for (std::size_t k = 0; k < profile.times.size(); ++k)
                curve.add({s.state_name(probes[p]), profile.times[k], profile.tv[p][k]});
        s.table(curve);
        profile = fit_ergodic_bound(std::move(profile));
        Table envelope{"envelope", {"time", "h"}, {}};
        for (std::size_t k = 0; k < profile.times.size(); ++k)
            envelope.add({profile.times[k], profile.h[k]});
        s.table(envelope);
        json K = json::object();
        for (std::size_t p = 0; p < probes.size(); ++p) K[s.state_name(probes[p])] = profile.K[p];
        s.record({{"check", "tv"},
                  {"K", K},
                  {"tail_ratio", profile.tail_ratio},
                  {"integral_h", json_number(profile.integral_h)},
                  {"a2_plausible", profile.a2_plausible}},
                 "diagnostic");
        s.out << "integral of h " << format_number(profile.integral_h) << "\n";
        return kExitOk;
    }
    if (check == "dynkin") {
        const Distribution mu = stationary_distribution(model);
        const ZeroPotential zp = zero_potential(model, s.f(), mu);
        const Region region = parse_region(model, s.cfg.region);
        const std::size_t cap = steps_of(s.cfg.horizon.value_or(50.0 * model.dt()), model.dt(), "--horizon");
        const DynkinReport rep = verify_dynkin_identity(model, zp, s.f(), region, cap, s.start(),
                                                        s.cfg.paths, s.cfg.seed, s.cfg.workers);
        s.record({{"check", "dynkin"},
                  {"estimate", rep.estimate},
                  {"std_error", rep.std_error},
                  {"reference", rep.reference},
                  {"z_score", json_number(rep.z_score)},
                  {"verdict", rep.pass ? "PASS" : "FAIL"}},
                 "diagnostic");
        s.out << "dynkin " << (rep.pass ? "PASS" : "FAIL") << " z=" << format_number(rep.z_score) << "\n";
        return rep.pass ? kExitOk : kExitVerdict;
    }
    fail(ErrorCode::InvalidArgument, "--check must be one of dynkin, tv, poisson");
}

int cmd_simulate(Session& s) {
    const MarkovModel& model = s.model();
    const RewardSpec rewards = s.rewards();
    const Region region = parse_region(model, s.cfg.region);
    const StateIndex start = s.start();
    std::vector<std::size_t> steps;
    if (s.cfg.horizons.empty()) {
        steps = {8, 16, 32, 64};
    } else {
        for (double h : s.cfg.horizons) steps.push_back(steps_of(h, model.dt(), "--horizons entry"));
    }
    McOptions mc;
    mc.n_paths = s.cfg.paths;
    mc.seed = s.cfg.seed;
    mc.workers = s.cfg.workers;

    const FunctionalEstimate fe = estimate_functional(model, rewards, region, start, steps, mc);
    Table functional{"functional", {"horizon_steps", "time", "mean", "std_error"}, {}};
    for (const auto& h : fe.horizons)
        functional.add({static_cast<std::int64_t>(h.steps), h.time, h.mean, h.std_error});
    s.table(functional);

    json verdict;
    verdict["start"] = s.state_name(start);
    verdict["region"] = region_json(model, region);
    verdict["trend"] = std::string(to_string(fe.verdict));
    verdict["liminf_window"] = fe.liminf_window;
    verdict["limsup_window"] = fe.limsup_window;

    bool pass = true;
    if (states_hitting_surely(model, region).contains(start)) {
        const TerminalGapEstimate tg = terminal_truncation_gap(model, rewards, region, start, steps, mc);
        Table gap{"terminal_gap", {"horizon_steps", "time", "g_minus", "g_minus_se", "gap", "gap_se"}, {}};
        for (std::size_t i = 0; i < steps.size(); ++i)
            gap.add({static_cast<std::int64_t>(steps[i]), static_cast<double>(steps[i]) * model.dt(),
                     tg.g_minus_term[i], tg.g_minus_se[i], tg.gap[i], tg.gap_se[i]});
        s.table(gap);
        verdict["uncapped_mean"] = tg.uncapped_mean;
        verdict["uncapped_se"] = tg.uncapped_se;
        verdict["terminal_gap"] = tg.pass ? "PASS" : "FAIL";
        pass = tg.pass;
    } else {
        verdict["terminal_gap"] = "skipped: region not hit almost surely";
    }

    if (!s.cfg.thresholds.empty()) {
        const ZetaTailEstimate zt =
            estimate_zeta_plus_tail(model, rewards.g, start, steps.back(), s.cfg.thresholds, mc);
        Table tail{"zeta_tail", {"threshold", "estimate", "std_error", "exact_at_horizon", "exact_limit"}, {}};
        for (std::size_t i = 0; i < zt.thresholds.size(); ++i)
            tail.add({zt.thresholds[i], zt.estimate[i], zt.std_error[i], zt.exact_at_horizon[i],
                      zt.exact_limit[i]});
        s.table(tail);
    }
    s.record(verdict, "verdict");
    s.out << "trend " << to_string(fe.verdict) << ", terminal gap "
          << verdict["terminal_gap"].get<std::string>() << "\n";
    return pass ? kExitOk : kExitVerdict;
}

int cmd_compactify(Session& s) {
    const MarkovModel& model = s.model();
    const StateIndex center = s.cfg.center.empty() ? 0 : parse_state(model, s.cfg.center);
    const Distribution mu = stationary_distribution(model);
    const CompactifiedReward cr = compactify_running_reward(model, s.f(), mu, center);
    Table table{"compactified", {"state", "distance", "f", "z", "f_hat", "f_bar", "in_ball_N", "in_ball_N1"}, {}};
    for (StateIndex x = 0; x < model.size(); ++x)
        table.add({s.state_name(x), model.distance(x, center), s.f()(ix(x)), cr.z(ix(x)),
                   cr.f_hat(ix(x)), cr.f_bar(ix(x)), cr.ball_N.contains(x), cr.ball_N1.contains(x)});
    s.table(table);
    s.table(long_table(table, "compactified_long"));
    s.record({{"center", s.state_name(center)},
              {"N", cr.N},
              {"mu_f", cr.mu_f},
              {"mu_f_bar", cr.mu_f_bar},
              {"tail_integral", cr.tail_integral}},
             "compactify");
    s.out << "N = " << cr.N << ", mu(f_bar) = " << format_number(cr.mu_f_bar) << "\n";
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Config cfg;
    CLI::App app{"Optimal stopping of ergodic Markov chains under the liminf functional", "ergostop"};
    app.fallthrough();
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", ERGOSTOP_VERSION);

    app.add_option("--model", cfg.model_path, "Model file (JSON)");
    app.add_option("--dt", cfg.dt, "Grid step; re-grids generator models");
    app.add_option("--horizon", cfg.horizon, "Horizon in time units");
    app.add_option("--truncate", cfg.truncate, "Truncation level n for the terminal reward");
    app.add_option("--tol", cfg.tol, "Value-iteration tolerance")->capture_default_str();
    app.add_option("--delta", cfg.delta, "delta in (0, 1] for d = delta mu(f)")->capture_default_str();
    app.add_option("--eps", cfg.eps, "Report the eps-optimal stop region");
    app.add_option("--paths", cfg.paths, "Monte Carlo paths")->capture_default_str();
    app.add_option("--seed", cfg.seed, "Master seed")->capture_default_str();
    app.add_option("--workers", cfg.workers, "Worker threads (0: hardware)")->capture_default_str();
    app.add_option("--out", cfg.out, "Output directory")->capture_default_str();
    app.add_option("--format", cfg.format, "Table format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    app.add_option("--region", cfg.region, "Comma-separated states, or 'all'");
    app.add_option("--start", cfg.start, "Start state");
    app.add_option("--center", cfg.center, "Center state for balls");
    app.add_option("--horizons", cfg.horizons, "Horizon grid in time units")->delimiter(',');
    app.add_option("--thresholds", cfg.thresholds, "Thresholds for zeta+ tails")->delimiter(',');

    app.add_subcommand("solve", "Finite-horizon value surface by backward induction");
    app.add_subcommand("solve-infinite", "Certified infinite-horizon value, region and tau* bound");
    app.add_subcommand("oracle-check", "Compare the solver against exhaustive region search");
    auto* diagnose = app.add_subcommand("diagnose", "Ergodicity and zero-potential diagnostics");
    diagnose->add_option("--check", cfg.check, "dynkin, tv or poisson")
        ->required()
        ->check(CLI::IsMember({"dynkin", "tv", "poisson"}));
    app.add_subcommand("simulate", "Monte Carlo functional, tails and truncation gap");
    app.add_subcommand("compactify", "Compactly supported running-reward modification");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << ERGOSTOP_VERSION << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }
    cfg.command = app.get_subcommands().front()->get_name();

    Session session{cfg, fs::path(cfg.out), cfg.format == "json" ? Format::Json : Format::Csv, out, {}, {}};
    json manifest;
    manifest["command"] = cfg.command;
    manifest["config"] = config_json(cfg);
    manifest["model_sha256"] = nullptr;
    manifest["seed"] = cfg.seed;
    manifest["version"] = ERGOSTOP_VERSION;
    manifest["started_at"] = utc_now();
    const auto t0 = std::chrono::steady_clock::now();

    int code = kExitOk;
    json outcome;
    try {
        if (!cfg.model_path.empty()) manifest["model_sha256"] = sha256_file(cfg.model_path);
        if (cfg.command == "solve") code = cmd_solve(session);
        else if (cfg.command == "solve-infinite") code = cmd_solve_infinite(session);
        else if (cfg.command == "oracle-check") code = cmd_oracle_check(session);
        else if (cfg.command == "diagnose") code = cmd_diagnose(session);
        else if (cfg.command == "simulate") code = cmd_simulate(session);
        else code = cmd_compactify(session);
        outcome["status"] = code == kExitOk ? "ok" : "verdict";
    } catch (const Error& e) {
        code = is_verdict(e.code()) ? kExitVerdict : kExitInput;
        outcome["status"] = code == kExitVerdict ? "verdict" : "error";
        outcome["code"] = std::string(to_string(e.code()));
        outcome["message"] = e.what();
        err << (code == kExitVerdict ? "verdict: " : "error: ") << e.what() << "\n";
    } catch (const std::exception& e) {
        code = kExitInput;
        outcome["status"] = "error";
        outcome["message"] = e.what();
        err << "error: " << e.what() << "\n";
    }
    outcome["exit_code"] = code;

    manifest["outputs"] = session.written;
    manifest["outcome"] = outcome;
    manifest["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    try {
        emit_record(manifest, session.dir, "manifest");
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return code;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, out, err);
}

}  // namespace ergostop::cli
