#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "robo_mv/rng.hpp"

namespace robo_mv {

typedef Eigen::MatrixXd Matrix;
typedef Eigen::VectorXd Vector;

/// Regime-switching market. Rates and moments are annual; regimes are 0-based.
struct MarketParams {
    Matrix transition;
    Vector risk_free;
    Vector mean_return;
    Vector vol_return;
    int steps_per_year = 12;

    int num_states() const { return static_cast<int>(transition.rows()); }

    double r_step(int y) const { return risk_free(y) / steps_per_year; }
    double mu_step(int y) const { return mean_return(y) / steps_per_year; }
    double sigma_step(int y) const { return vol_return(y) / std::sqrt(static_cast<double>(steps_per_year)); }
    double gross_rate(int y) const { return 1.0 + r_step(y); }
    double excess_mean(int y) const { return mu_step(y) - r_step(y); }
};

/// Empty result means valid. Entries are "Code: detail".
std::vector<std::string> validate(const MarketParams& params);

/// Throws the first validation failure as a config Error.
void require_valid(const MarketParams& params);

/// Left eigenvector of P for eigenvalue 1, normalized to sum 1.
/// Throws NonErgodic for several closed classes or a periodic chain.
Vector stationary_distribution(const Matrix& transition);
inline Vector stationary_distribution(const MarketParams& params) {
    return stationary_distribution(params.transition);
}

int sample_next_state(const Matrix& transition, int y, Rng& rng);

struct MarketStep {
    int next;  ///< y'
    double z;  ///< risky return over the step
};

MarketStep sample_step(const MarketParams& params, int y, Rng& rng);

struct ExcessMoments {
    double mean;      ///< mu_step - r_step
    double variance;  ///< sigma_step^2
};

ExcessMoments excess_moments(const MarketParams& params, int y);

MarketParams single_state_market(double r, double mu, double sigma, int steps_per_year = 12);

/// Two-regime growth/contraction market used for the business-cycle study.
MarketParams business_cycle_market();

}  // namespace robo_mv
