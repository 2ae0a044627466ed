#pragma once

#include <cstdint>

#include "robo_mv/market.hpp"
#include "robo_mv/risk_profile.hpp"
#include "robo_mv/solver.hpp"

namespace robo_mv {

struct Estimate {
    double value = 0.0;
    double se = 0.0;
    std::uint64_t excluded = 0;  ///< path-steps dropped (S only)
    std::uint64_t counted = 0;   ///< path-steps used
    double clamp_fraction = 0.0; ///< share of policy lookups outside the grid (S only)
};

struct MeasureOptions {
    int y0 = 0;
    long n_paths = 50000;
    std::uint64_t seed = 1;
    bool fast = false;  ///< stay in the initial regime (reduced single-regime form)
    int threads = 0;
};

/// Average relative gap (1/T) sum_n |gamma_C_n / gamma_n - 1| between the client's and the
/// robo-advisor's risk aversion, for interaction period phi and bias beta (overriding `profile`).
Estimate r_measure(int phi, double beta, const MarketParams& market, const RiskProfileParams& profile, int T,
                   const MeasureOptions& options);

/// First-order approximation of R for a single regime with per-step return SD sigma0.
double r_tilde(double phi, double beta, double sigma0, double p_eps, double sigma_eps);

/// d r_tilde / d phi.
double r_tilde_dphi(double phi, double beta, double sigma0, double p_eps, double sigma_eps);

struct PhiStar {
    double phi0 = 1.0;     ///< continuous minimizer (meaningless when unbounded)
    int integer = 1;       ///< better of floor/ceil of phi0
    bool unbounded = false;
};

PhiStar phi_star(double beta, double sigma0, double p_eps, double sigma_eps, double phi_max);

/// True iff r_tilde decreases at phi = 1, i.e. interacting every step is not optimal.
bool interact_every_step_suboptimal(double beta, double sigma0, double p_eps, double sigma_eps);

/// Bracket for R: (T_phi/T) r_tilde - err <= R <= (T^phi/T) r_tilde + err, where T_phi, T^phi are the
/// multiples of phi flanking T and err = C(phi,2) p^2 s_eps^2 + beta^2 sigma0^2 + cushion * se.
struct SandwichBand {
    double lower;
    double upper;
    double approximation_error;
};

SandwichBand r_sandwich(int phi, int T, double beta, double sigma0, double p_eps, double sigma_eps, double se,
                        double cushion = 4.0);

/// Average relative allocation gap between the policy driven by the robo-advisor's gamma
/// (phi, beta) and the full-information policy (phi = 1, beta = 0) along shared paths.
Estimate s_measure(int phi, double beta, const MarketParams& market, const RiskProfileParams& profile, int T,
                   const GridSpec& grid, const MeasureOptions& options);

}  // namespace robo_mv
