#pragma once

#include <span>
#include <vector>

#include "robo_mv/market.hpp"
#include "robo_mv/rng.hpp"

namespace robo_mv {

/// Client risk-aversion model. gamma_C_n = exp(eta_n) * gamma_id_n * gamma_bar_n(Y_n),
/// with gamma_id a multiplicative martingale driven by jump shocks.
struct RiskProfileParams {
    double alpha = 0.0;      ///< eta_n = -alpha (T - n) unless `eta` is given
    double p_eps = 0.0;      ///< jump probability per step
    double sigma_eps = 0.0;  ///< jump volatility
    double beta = 0.0;       ///< behavioral bias strength
    int phi = 1;             ///< interaction period in steps
    double gamma0 = 1.0;
    Matrix gamma_bar;        ///< (T+1) x M, or 1 x M broadcast in time; empty means 1
    std::vector<double> eta; ///< optional explicit eta_0..eta_T

    double eta_at(int n, int T) const;
    double gamma_bar_at(int n, int y) const;
    bool is_interaction(int n) const { return n % phi == 0; }
    int last_interaction(int n) const { return n - n % phi; }
};

void require_valid(const RiskProfileParams& params, int num_states, int T);

double sample_eps(const RiskProfileParams& params, Rng& rng);

/// gamma_Z = exp(-beta/phi * sum of window deviations Z - mu). Window length must be phi.
double bias_factor(std::span<const double> window_deviations, double beta, int phi);

/// xi = gamma_C * gamma_Z, defined only at interaction times.
double communicated_xi(int n, int phi, double gamma_c, double gamma_z);

/// gamma_n = exp(eta_n - eta_tau) * xi_tau * gamma_bar_n(Y_n) / gamma_bar_tau(Y_tau).
double robo_gamma(int n, double xi_tau, int tau, int y_n, int y_tau, const RiskProfileParams& params, int T);

/// Regimes Y_0..Y_T and returns z[n] earned over step n -> n+1 (in regime Y_n).
struct MarketPath {
    std::vector<int> regime;
    std::vector<double> z;
};

MarketPath simulate_market_path(const MarketParams& market, int y0, int T, Rng& rng);

struct ClientTrajectory {
    std::vector<double> gamma_id;  ///< n = 0..T
    std::vector<double> gamma_c;   ///< n = 0..T
    std::vector<double> gamma_z;   ///< per step: bias at tau_n
    std::vector<double> xi;        ///< per step: xi_{tau_n}
    std::vector<double> gamma;     ///< robo-advisor model gamma_n
    std::vector<int> tau;
};

/// Client processes along a given market path. Draws the idiosyncratic shocks from rng.
ClientTrajectory client_trajectory(const MarketPath& path, const MarketParams& market,
                                   const RiskProfileParams& params, Rng& rng);

}  // namespace robo_mv
