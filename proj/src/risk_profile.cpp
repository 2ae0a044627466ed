#include "robo_mv/risk_profile.hpp"

#include <cmath>

#include "robo_mv/error.hpp"

namespace robo_mv {

double RiskProfileParams::eta_at(int n, int T) const {
    if (!eta.empty()) return eta.at(static_cast<std::size_t>(n));
    return -alpha * (T - n);
}

double RiskProfileParams::gamma_bar_at(int n, int y) const {
    if (gamma_bar.size() == 0) return 1.0;
    const Eigen::Index row = std::min<Eigen::Index>(n, gamma_bar.rows() - 1);
    return gamma_bar(row, y);
}

void require_valid(const RiskProfileParams& p, int num_states, int T) {
    auto bad = [](const std::string& what) { fail(ErrorKind::Config, "BadRiskProfile", what); };
    if (p.phi < 1) bad("phi must be >= 1");
    if (!(p.gamma0 > 0.0)) bad("gamma0 must be > 0");
    if (p.p_eps < 0.0 || p.p_eps > 1.0) bad("p_eps must lie in [0,1]");
    if (p.sigma_eps < 0.0) bad("sigma_eps must be >= 0");
    if (p.beta < 0.0) bad("beta must be >= 0");
    if (p.alpha < 0.0) bad("alpha must be >= 0");
    if (!p.eta.empty() && static_cast<int>(p.eta.size()) != T + 1) bad("eta table must have T+1 entries");
    if (p.gamma_bar.size() != 0) {
        if (p.gamma_bar.cols() != num_states) bad("gamma_bar must have one column per state");
        if (p.gamma_bar.rows() != 1 && p.gamma_bar.rows() < T + 1) bad("gamma_bar must have 1 or T+1 rows");
        if ((p.gamma_bar.array() <= 0.0).any()) bad("gamma_bar entries must be > 0");
    }
}

double sample_eps(const RiskProfileParams& p, Rng& rng) {
    if (!rng.bernoulli(p.p_eps)) return 0.0;
    return p.sigma_eps * rng.normal() - 0.5 * p.sigma_eps * p.sigma_eps;
}

double bias_factor(std::span<const double> window, double beta, int phi) {
    if (static_cast<int>(window.size()) != phi)
        fail(ErrorKind::Config, "WindowLengthMismatch",
             "window has " + std::to_string(window.size()) + " entries, phi = " + std::to_string(phi));
    double s = 0.0;
    for (double d : window) s += d;
    return std::exp(-beta * s / phi);
}

double communicated_xi(int n, int phi, double gamma_c, double gamma_z) {
    if (n % phi != 0)
        fail(ErrorKind::Config, "NotInteractionTime", std::to_string(n) + " is not a multiple of " + std::to_string(phi));
    return gamma_c * gamma_z;
}

double robo_gamma(int n, double xi_tau, int tau, int y_n, int y_tau, const RiskProfileParams& p, int T) {
    return std::exp(p.eta_at(n, T) - p.eta_at(tau, T)) * xi_tau * p.gamma_bar_at(n, y_n) / p.gamma_bar_at(tau, y_tau);
}

MarketPath simulate_market_path(const MarketParams& market, int y0, int T, Rng& rng) {
    MarketPath path;
    path.regime.resize(static_cast<std::size_t>(T) + 1);
    path.z.resize(static_cast<std::size_t>(T));
    path.regime[0] = y0;
    for (int n = 0; n < T; ++n) {
        const MarketStep s = sample_step(market, path.regime[n], rng);
        path.z[n] = s.z;
        path.regime[n + 1] = s.next;
    }
    return path;
}

ClientTrajectory client_trajectory(const MarketPath& path, const MarketParams& market,
                                   const RiskProfileParams& p, Rng& rng) {
    const int T = static_cast<int>(path.z.size());
    ClientTrajectory out;
    out.gamma_id.resize(T + 1);
    out.gamma_c.resize(T + 1);
    out.gamma_z.resize(T + 1);
    out.xi.resize(T + 1);
    out.gamma.resize(T + 1);
    out.tau.resize(T + 1);

    std::vector<double> deviation(T);
    for (int n = 0; n < T; ++n) deviation[n] = path.z[n] - market.mu_step(path.regime[n]);

    out.gamma_id[0] = p.gamma0;
    for (int n = 1; n <= T; ++n) out.gamma_id[n] = out.gamma_id[n - 1] * std::exp(sample_eps(p, rng));

    double gz = 1.0, xi = 0.0;
    for (int n = 0; n <= T; ++n) {
        const int y = path.regime[n];
        out.gamma_c[n] = std::exp(p.eta_at(n, T)) * out.gamma_id[n] * p.gamma_bar_at(n, y);
        const int tau = p.last_interaction(n);
        if (tau == n) {
            // No pre-history before the first interaction.
            gz = n == 0 ? 1.0
                        : bias_factor(std::span<const double>(deviation).subspan(n - p.phi, p.phi), p.beta, p.phi);
            xi = communicated_xi(n, p.phi, out.gamma_c[n], gz);
        }
        out.tau[n] = tau;
        out.gamma_z[n] = gz;
        out.xi[n] = xi;
        out.gamma[n] = robo_gamma(n, xi, tau, y, path.regime[tau], p, T);
    }
    return out;
}

}  // namespace robo_mv
