#include "robo_mv/config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>

#include "robo_mv/error.hpp"

namespace robo_mv {

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) fail(ErrorKind::Config, "BadType", where + " must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) fail(ErrorKind::Config, "UnknownKey", where + key);
}

const json& require(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) fail(ErrorKind::Config, "MissingKey", where + key);
    return j.at(key);
}

template <class T>
T get(const json& j, const std::string& key, const std::string& where) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        fail(ErrorKind::Config, "BadType", where + key);
    }
}

Vector vector_from(const json& j, const std::string& key) {
    const auto v = get<std::vector<double>>(j, key, "");
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Matrix matrix_from(const json& j, const std::string& key) {
    const auto rows = get<std::vector<std::vector<double>>>(j, key, "");
    Matrix m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (static_cast<Eigen::Index>(rows[i].size()) != m.cols())
            fail(ErrorKind::Config, "BadDimension", key + " rows differ in length");
        for (std::size_t c = 0; c < rows[i].size(); ++c) m(i, c) = rows[i][c];
    }
    return m;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
        rows.push_back(row);
    }
    return rows;
}

json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

const std::set<std::string> kMarketKeys = {"states", "transition", "risk_free", "mean_return", "vol_return",
                                           "steps_per_year"};

}  // namespace

MarketParams market_from_json(const json& j) {
    MarketParams m;
    const int states = get<int>(require(j, "states", ""), "states", "");
    m.transition = matrix_from(require(j, "transition", ""), "transition");
    m.risk_free = vector_from(require(j, "risk_free", ""), "risk_free");
    m.mean_return = vector_from(require(j, "mean_return", ""), "mean_return");
    m.vol_return = vector_from(require(j, "vol_return", ""), "vol_return");
    m.steps_per_year = get<int>(require(j, "steps_per_year", ""), "steps_per_year", "");
    if (m.transition.rows() != states) fail(ErrorKind::Config, "BadDimension", "states does not match transition");
    require_valid(m);
    return m;
}

RiskProfileParams profile_from_json(const json& j) {
    const std::string w = "risk_profile.";
    reject_unknown(j, {"alpha", "p_eps", "sigma_eps", "beta", "phi", "gamma0", "gamma_bar", "eta"}, w);
    RiskProfileParams p;
    if (j.contains("alpha")) p.alpha = get<double>(j["alpha"], "alpha", w);
    if (j.contains("p_eps")) p.p_eps = get<double>(j["p_eps"], "p_eps", w);
    if (j.contains("sigma_eps")) p.sigma_eps = get<double>(j["sigma_eps"], "sigma_eps", w);
    if (j.contains("beta")) p.beta = get<double>(j["beta"], "beta", w);
    if (j.contains("phi")) p.phi = get<int>(j["phi"], "phi", w);
    if (j.contains("gamma0")) p.gamma0 = get<double>(j["gamma0"], "gamma0", w);
    if (j.contains("gamma_bar")) {
        const json& g = j["gamma_bar"];
        p.gamma_bar = g.size() > 0 && g[0].is_array() ? matrix_from(g, "gamma_bar")
                                                      : Matrix(vector_from(g, "gamma_bar").transpose());
    }
    if (j.contains("eta")) p.eta = get<std::vector<double>>(j["eta"], "eta", w);
    return p;
}

GridSpec grid_from_json(const json& j) {
    const std::string w = "grid.";
    reject_unknown(j, {"xi_nodes", "xi_min", "xi_max", "zsum_nodes", "zsum_span_sd", "quad_points", "pipeline", "warped"}, w);
    GridSpec g;
    if (j.contains("xi_nodes")) g.xi_nodes = get<int>(j["xi_nodes"], "xi_nodes", w);
    if (j.contains("xi_min")) g.xi_min = get<double>(j["xi_min"], "xi_min", w);
    if (j.contains("xi_max")) g.xi_max = get<double>(j["xi_max"], "xi_max", w);
    if (j.contains("zsum_nodes")) g.zsum_nodes = get<int>(j["zsum_nodes"], "zsum_nodes", w);
    if (j.contains("zsum_span_sd")) g.zsum_span_sd = get<double>(j["zsum_span_sd"], "zsum_span_sd", w);
    if (j.contains("quad_points")) g.quad_points = get<int>(j["quad_points"], "quad_points", w);
    if (j.contains("warped")) g.warped = get<bool>(j["warped"], "warped", w);
    if (j.contains("pipeline")) {
        const auto s = get<std::string>(j["pipeline"], "pipeline", w);
        if (s == "general") g.pipeline = Pipeline::General;
        else if (s == "independent") g.pipeline = Pipeline::Independent;
        else fail(ErrorKind::Config, "BadValue", w + "pipeline must be general or independent");
    }
    return g;
}

RunConfig run_config_from_json(const json& j) {
    std::set<std::string> allowed = kMarketKeys;
    allowed.insert({"risk_profile", "grid", "strategy", "horizon", "initial_state", "initial_wealth", "paths", "seed",
                    "bounds", "liquidation"});
    reject_unknown(j, allowed, "");
    RunConfig c;
    c.market = market_from_json(j);
    if (j.contains("risk_profile")) c.profile = profile_from_json(j["risk_profile"]);
    if (j.contains("grid")) c.grid = grid_from_json(j["grid"]);
    if (j.contains("strategy")) {
        const json& s = j["strategy"];
        reject_unknown(s, {"pi_bar", "delta"}, "strategy.");
        if (s.contains("pi_bar")) c.strategy.pi_bar = get<double>(s["pi_bar"], "pi_bar", "strategy.");
        if (s.contains("delta")) c.strategy.delta = get<double>(s["delta"], "delta", "strategy.");
    }
    if (j.contains("horizon")) c.horizon = get<int>(j["horizon"], "horizon", "");
    if (j.contains("initial_state")) c.initial_state = get<int>(j["initial_state"], "initial_state", "") - 1;
    if (j.contains("initial_wealth")) c.initial_wealth = get<double>(j["initial_wealth"], "initial_wealth", "");
    if (j.contains("paths")) c.paths = get<long>(j["paths"], "paths", "");
    if (j.contains("seed")) c.seed = get<std::uint64_t>(j["seed"], "seed", "");
    if (j.contains("bounds")) {
        const auto b = get<std::vector<double>>(j["bounds"], "bounds", "");
        if (b.size() != 2) fail(ErrorKind::Config, "BadValue", "bounds must be [lower, upper]");
        c.lower = c.grid.lower = b[0];
        c.upper = c.grid.upper = b[1];
    }
    if (j.contains("liquidation")) c.liquidation = get<bool>(j["liquidation"], "liquidation", "");
    if (c.initial_state < 0 || c.initial_state >= c.market.num_states())
        fail(ErrorKind::Config, "BadValue", "initial_state out of range");
    require_valid(c.profile, c.market.num_states(), c.horizon);
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::IO, "ReadFailed", path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, "BadJson", path.string() + ": " + e.what());
    }
    return run_config_from_json(j);
}

json to_json(const MarketParams& m) {
    json j;
    j["states"] = m.num_states();
    j["transition"] = matrix_to_json(m.transition);
    j["risk_free"] = vector_to_json(m.risk_free);
    j["mean_return"] = vector_to_json(m.mean_return);
    j["vol_return"] = vector_to_json(m.vol_return);
    j["steps_per_year"] = m.steps_per_year;
    return j;
}

json to_json(const RiskProfileParams& p) {
    json j;
    j["alpha"] = p.alpha;
    j["p_eps"] = p.p_eps;
    j["sigma_eps"] = p.sigma_eps;
    j["beta"] = p.beta;
    j["phi"] = p.phi;
    j["gamma0"] = p.gamma0;
    if (p.gamma_bar.size() != 0) j["gamma_bar"] = matrix_to_json(p.gamma_bar);
    if (!p.eta.empty()) j["eta"] = p.eta;
    return j;
}

json to_json(const GridSpec& g) {
    json j;
    j["xi_nodes"] = g.xi_nodes;
    j["xi_min"] = g.xi_min;
    j["xi_max"] = g.xi_max;
    j["zsum_nodes"] = g.zsum_nodes;
    j["zsum_span_sd"] = g.zsum_span_sd;
    j["quad_points"] = g.quad_points;
    j["pipeline"] = g.pipeline == Pipeline::General ? "general" : "independent";
    j["warped"] = g.warped;
    return j;
}

json to_json(const RunConfig& c) {
    json j = to_json(c.market);
    j["risk_profile"] = to_json(c.profile);
    j["grid"] = to_json(c.grid);
    j["strategy"] = {{"pi_bar", c.strategy.pi_bar}, {"delta", c.strategy.delta}};
    j["horizon"] = c.horizon;
    j["initial_state"] = c.initial_state + 1;
    j["initial_wealth"] = c.initial_wealth;
    j["paths"] = c.paths;
    j["seed"] = c.seed;
    if (std::isfinite(c.lower) || std::isfinite(c.upper)) j["bounds"] = {c.lower, c.upper};
    j["liquidation"] = c.liquidation;
    return j;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::IO, "WriteFailed", path.string());
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n' << std::setprecision(12);
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << '\n';
    }
    if (!out) fail(ErrorKind::IO, "WriteFailed", path.string());
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::IO, "WriteFailed", path.string());
    out << j.dump(2) << '\n';
    if (!out) fail(ErrorKind::IO, "WriteFailed", path.string());
}

}  // namespace robo_mv
