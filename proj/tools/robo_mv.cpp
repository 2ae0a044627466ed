#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "robo_mv/config.hpp"
#include "robo_mv/cycle_analytics.hpp"
#include "robo_mv/error.hpp"
#include "robo_mv/montecarlo.hpp"
#include "robo_mv/personalization.hpp"
#include "robo_mv/solver.hpp"

namespace fs = std::filesystem;
using namespace robo_mv;

namespace {

struct Options {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    std::optional<long> paths;
    std::optional<double> delta;
    std::optional<double> beta;
    std::optional<int> quad_points;
    std::optional<int> threads;
    std::string phi_range = "1:12";
    bool dump_paths = false;
    bool policy = false;
    bool skip_s = false;
    std::string sweep;
    double from = 0.0;
    double to = 0.0;
    int steps = 11;
    int bins = 50;
};

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::IO, "ReadFailed", path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, "BadJson", path.string() + ": " + e.what());
    }
}

// Accepts a run config or a manifest written by a previous run.
RunConfig load(const Options& o, json& resolved_source) {
    if (o.config.empty()) fail(ErrorKind::Config, "MissingConfig", "--config is required");
    json j = read_json(o.config);
    if (j.contains("command") && j.contains("config")) j = j["config"];
    resolved_source = j;
    return run_config_from_json(j);
}

json apply_overrides(RunConfig& c, const Options& o) {
    json ov = json::object();
    if (o.seed) c.seed = *o.seed, ov["seed"] = *o.seed;
    if (o.paths) c.paths = *o.paths, ov["paths"] = *o.paths;
    if (o.delta) c.strategy.delta = *o.delta, ov["delta"] = *o.delta;
    if (o.beta) c.profile.beta = *o.beta, ov["beta"] = *o.beta;
    if (o.quad_points) c.grid.quad_points = *o.quad_points, ov["quad_points"] = *o.quad_points;
    if (o.threads) c.grid.threads = *o.threads, ov["threads"] = *o.threads;
    return ov;
}

class Run {
public:
    Run(std::string command, const Options& o) : command_(std::move(command)), opts_(o) {
        json source;
        config = load(o, source);
        overrides_ = apply_overrides(config, o);
        out_dir = o.out;
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) fail(ErrorKind::IO, "WriteFailed", out_dir.string() + ": " + ec.message());
    }

    fs::path output(const std::string& name) {
        outputs_.push_back(name);
        return out_dir / name;
    }

    void finish(const json& extra = json::object()) {
        json m;
        m["command"] = command_;
        m["config"] = to_json(config);
        m["overrides"] = overrides_;
        m["outputs"] = outputs_;
        for (const auto& [k, v] : extra.items()) m[k] = v;
        write_json(out_dir / "manifest.json", m);
    }

    RunConfig config;
    fs::path out_dir;
    int threads() const { return opts_.threads.value_or(0); }

private:
    std::string command_;
    Options opts_;
    json overrides_;
    std::vector<std::string> outputs_;
};

json stats_json(const StatsSummary& s) {
    return {{"mean", s.mean},   {"sd", s.sd},       {"skewness", s.skewness}, {"kurtosis", s.kurtosis},
            {"var90", s.var90}, {"var95", s.var95}, {"var99", s.var99},       {"count", s.count}};
}

void cmd_solve(const Options& o) {
    Run run("solve", o);
    const RunConfig& c = run.config;
    const PolicyTables pt = solve(c.market, c.profile, c.horizon, c.grid);
    const std::vector<std::string> header{"xi", "prev_sum", "cur_sum", "regime", "pi_star", "a", "b", "V"};
    for (int n = 0; n < pt.T; ++n) {
        char name[32];
        std::snprintf(name, sizeof name, "policy_%03d.csv", n);
        std::vector<std::vector<double>> rows;
        rows.reserve(pt.grid.size());
        const PolicySlice& s = pt.slices[n];
        for (std::size_t i = 0; i < pt.grid.size(); ++i) {
            const ReducedState st = pt.grid.node(i);
            rows.push_back({st.xi, st.prev_sum, st.cur_sum, st.regime + 1.0, s.pi[i], s.a[i], s.b[i], s.value[i]});
        }
        write_csv(run.output(name), header, rows);
    }
    const ReducedState s0{c.profile.gamma0, 0.0, 0.0, c.initial_state};
    const double pi0 = pt.allocation(0, s0);
    std::cout << "grid nodes " << pt.grid.size() << ", slices " << pt.T << "\n"
              << "pi*_0 at initial state " << pi0 << "\n"
              << "solver clamp fraction " << pt.diagnostics.clamp_fraction() << "\n";
    run.finish({{"grid",
                 {{"xi_nodes", pt.grid.log_xi.size()},
                  {"xi_min", std::exp(pt.grid.log_xi.front())},
                  {"xi_max", std::exp(pt.grid.log_xi.back())},
                  {"window_nodes", pt.grid.prev.size()},
                  {"regimes", pt.grid.regimes}}},
                {"pi0", pi0},
                {"solver_clamp_fraction", pt.diagnostics.clamp_fraction()}});
}

void cmd_simulate(const Options& o) {
    Run run("simulate", o);
    const RunConfig& c = run.config;
    SimConfig sc;
    sc.T = c.horizon;
    sc.n_paths = c.paths;
    sc.seed = c.seed;
    sc.y0 = c.initial_state;
    sc.x0 = c.initial_wealth;
    sc.lower = c.lower;
    sc.upper = c.upper;
    sc.liquidation = c.liquidation;
    sc.threads = run.threads();

    std::vector<double> returns;
    json extra = json::object();
    if (o.policy) {
        const PolicyTables pt = solve(c.market, c.profile, c.horizon, c.grid);
        PolicySimulation sim = simulate_policy(pt, sc);
        returns = std::move(sim.returns);
        extra["path_clamp_fraction"] = sim.clamp_fraction();
    } else {
        returns = simulate(c.market, c.strategy, sc);
    }
    std::uint64_t excluded = 0;
    const auto ann = annualized(returns, c.horizon, c.market.steps_per_year, &excluded);
    json s;
    s["total_return"] = stats_json(stats(returns));
    s["annualized_return"] = stats_json(stats(ann));
    s["annualized_excluded"] = excluded;
    s.update(extra);
    write_json(run.output("stats.json"), s);

    std::vector<std::vector<double>> rows;
    for (const auto& b : histogram(returns, o.bins)) rows.push_back({b.left, b.right, double(b.count)});
    write_csv(run.output("histogram.csv"), {"bin_left", "bin_right", "count"}, rows);
    if (o.dump_paths) {
        std::vector<std::vector<double>> r;
        r.reserve(returns.size());
        for (std::size_t i = 0; i < returns.size(); ++i) r.push_back({double(i), returns[i]});
        write_csv(run.output("paths.csv"), {"path", "total_return"}, r);
    }
    std::cout << s.dump(2) << "\n";
    run.finish();
}

std::pair<int, int> parse_range(const std::string& s) {
    const auto colon = s.find(':');
    try {
        if (colon == std::string::npos) {
            const int v = std::stoi(s);
            return {v, v};
        }
        return {std::stoi(s.substr(0, colon)), std::stoi(s.substr(colon + 1))};
    } catch (const std::exception&) {
        fail(ErrorKind::Config, "BadValue", "--phi-range must be a:b");
    }
}

void cmd_personalize(const Options& o) {
    Run run("personalize", o);
    const RunConfig& c = run.config;
    const auto [lo, hi] = parse_range(o.phi_range);
    if (lo < 1 || hi < lo) fail(ErrorKind::Config, "BadValue", "--phi-range needs 1 <= a <= b");
    MeasureOptions mo;
    mo.y0 = c.initial_state;
    mo.n_paths = c.paths;
    mo.seed = c.seed;
    mo.threads = run.threads();
    const double beta = c.profile.beta;
    const double s0 = c.market.sigma_step(c.initial_state);
    std::vector<std::vector<double>> rows;
    for (int phi = lo; phi <= hi; ++phi) {
        const Estimate r = r_measure(phi, beta, c.market, c.profile, c.horizon, mo);
        const double rt = r_tilde(phi, beta, s0, c.profile.p_eps, c.profile.sigma_eps);
        double s = NAN, s_se = NAN;
        if (!o.skip_s) {
            const Estimate e = s_measure(phi, beta, c.market, c.profile, c.horizon, c.grid, mo);
            s = e.value;
            s_se = e.se;
        }
        rows.push_back({double(phi), r.value, r.se, rt, s, s_se});
        std::cout << "phi " << phi << ": R " << r.value << " +- " << r.se << ", R~ " << rt;
        if (!o.skip_s) std::cout << ", S " << s << " +- " << s_se;
        std::cout << "\n";
    }
    write_csv(run.output("personalize.csv"), {"phi", "R", "R_se", "R_tilde", "S", "S_se"}, rows);
    json extra = json::object();
    if (beta > 0.0 && s0 > 0.0) {
        const PhiStar ps = phi_star(beta, s0, c.profile.p_eps, c.profile.sigma_eps, c.horizon);
        extra["phi_star"] = {{"phi0", ps.phi0}, {"integer", ps.integer}, {"unbounded", ps.unbounded}};
        std::cout << "phi* " << (ps.unbounded ? std::string("unbounded") : std::to_string(ps.integer)) << "\n";
    }
    run.finish(extra);
}

void cmd_sharpe(const Options& o) {
    Run run("sharpe", o);
    const RunConfig& c = run.config;
    const int k = c.market.steps_per_year;
    if (o.sweep.empty()) {
        Vector pi(c.market.num_states());
        for (int y = 0; y < pi.size(); ++y) pi(y) = c.strategy.allocation(y);
        const double s = sharpe_general(pi, c.market);
        std::cout << "sharpe per step " << s << ", annualized " << annualize_sharpe(s, k) << "\n";
        write_csv(run.output("sharpe.csv"), {"sweep_var", "value", "sharpe_annualized"},
                  {{c.strategy.delta, c.strategy.delta, annualize_sharpe(s, k)}});
        run.finish({{"sweep", "none"}});
        return;
    }
    const SharpeInputs base = sharpe_inputs(c.market);
    if (o.steps < 2) fail(ErrorKind::Config, "BadValue", "--steps must be >= 2");
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < o.steps; ++i) {
        const double v = o.from + (o.to - o.from) * i / (o.steps - 1);
        SharpeInputs in = base;
        double delta = c.strategy.delta;
        if (o.sweep == "delta") delta = v;
        else if (o.sweep == "lambda") in.lambda = v;
        else if (o.sweep == "a") in.a = v;
        else if (o.sweep == "b") in.b = v;
        else fail(ErrorKind::Config, "BadValue", "--sweep must be delta, lambda, a or b");
        const double s = sharpe_delta(delta, in);
        rows.push_back({v, s, annualize_sharpe(s, k)});
    }
    write_csv(run.output("sharpe.csv"), {"sweep_var", "value", "sharpe_annualized"}, rows);
    std::cout << "wrote " << rows.size() << " rows sweeping " << o.sweep << "\n";
    run.finish({{"sweep", o.sweep}});
}

void cmd_implied_gamma(const Options& o) {
    Run run("implied-gamma", o);
    const RunConfig& c = run.config;
    const Matrix g = implied_gamma(c.strategy.pi_bar, c.strategy.delta, c.market, c.horizon);
    std::vector<std::string> header{"n"};
    for (int y = 0; y < g.cols(); ++y) header.push_back("gamma_" + std::to_string(y + 1));
    std::vector<std::vector<double>> rows;
    for (int n = 0; n < g.rows(); ++n) {
        std::vector<double> row{double(n)};
        for (int y = 0; y < g.cols(); ++y) row.push_back(g(n, y));
        rows.push_back(row);
    }
    write_csv(run.output("implied_gamma.csv"), header, rows);
    std::cout << "gamma_0 =";
    for (int y = 0; y < g.cols(); ++y) std::cout << " " << g(0, y);
    std::cout << "\n";
    run.finish();
}

void cmd_stationary(const Options& o) {
    json source;
    const RunConfig c = load(o, source);
    const Vector l = stationary_distribution(c.market);
    std::cout << std::fixed << std::setprecision(6);
    for (int y = 0; y < l.size(); ++y) std::cout << (y ? ", " : "") << l(y);
    std::cout << "\n";
}

int exit_code(ErrorKind k) {
    switch (k) {
    case ErrorKind::Config:
        return 2;
    case ErrorKind::Numerical:
        return 3;
    case ErrorKind::IO:
        return 4;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robo-advising mean-variance toolkit"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub, bool writes) {
        sub->add_option("--config", o.config, "run config or manifest.json")->required();
        if (!writes) return;
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--threads", o.threads, "worker threads (default: ROBO_MV_THREADS or all cores)");
    };

    auto* solve_cmd = app.add_subcommand("solve", "solve the equilibrium policy and write per-slice CSVs");
    common(solve_cmd, true);
    solve_cmd->add_option("--quad-points", o.quad_points, "Gauss-Hermite nodes");
    solve_cmd->add_option("--beta", o.beta, "override the bias strength");

    auto* sim_cmd = app.add_subcommand("simulate", "simulate wealth paths and summarize returns");
    common(sim_cmd, true);
    sim_cmd->add_option("--seed", o.seed);
    sim_cmd->add_option("--paths", o.paths);
    sim_cmd->add_option("--delta", o.delta, "state-2 tilt of the cycle strategy");
    sim_cmd->add_option("--bins", o.bins, "histogram bins");
    sim_cmd->add_flag("--policy", o.policy, "simulate the solved policy instead of the cycle strategy");
    sim_cmd->add_option("--quad-points", o.quad_points);
    sim_cmd->add_flag("--dump-paths", o.dump_paths, "also write per-path total returns");

    auto* pers_cmd = app.add_subcommand("personalize", "personalization measures over a range of phi");
    common(pers_cmd, true);
    pers_cmd->add_option("--phi-range", o.phi_range, "a:b")->capture_default_str();
    pers_cmd->add_option("--beta", o.beta);
    pers_cmd->add_option("--seed", o.seed);
    pers_cmd->add_option("--paths", o.paths);
    pers_cmd->add_option("--quad-points", o.quad_points);
    pers_cmd->add_flag("--skip-s", o.skip_s, "skip the allocation-gap measure (no policy solves)");

    auto* sharpe_cmd = app.add_subcommand("sharpe", "long-run Sharpe ratio of the cycle strategy");
    common(sharpe_cmd, true);
    sharpe_cmd->add_option("--delta", o.delta);
    sharpe_cmd->add_option("--sweep", o.sweep, "delta, lambda, a or b");
    sharpe_cmd->add_option("--from", o.from);
    sharpe_cmd->add_option("--to", o.to);
    sharpe_cmd->add_option("--steps", o.steps)->capture_default_str();

    auto* ig_cmd = app.add_subcommand("implied-gamma", "risk aversion implied by the cycle strategy");
    common(ig_cmd, true);
    ig_cmd->add_option("--delta", o.delta);

    auto* st_cmd = app.add_subcommand("stationary", "stationary distribution of the regime chain");
    common(st_cmd, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*solve_cmd) cmd_solve(o);
        else if (*sim_cmd) cmd_simulate(o);
        else if (*pers_cmd) cmd_personalize(o);
        else if (*sharpe_cmd) cmd_sharpe(o);
        else if (*ig_cmd) cmd_implied_gamma(o);
        else if (*st_cmd) cmd_stationary(o);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
