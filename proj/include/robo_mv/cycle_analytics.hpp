#pragma once

#include <cmath>

#include "robo_mv/error.hpp"
#include "robo_mv/market.hpp"

namespace robo_mv {

/// State-homogeneous strategy: pi_bar in state 1, pi_bar (1 + delta) in state 2.
struct CycleStrategy {
    double pi_bar = 0.6;
    double delta = 0.0;

    double allocation(int y) const { return y == 0 ? pi_bar : pi_bar * (1.0 + delta); }
};

/// Two-state Sharpe ingredients: lambda = stationary weight of state 2, a and b the
/// state-2/state-1 ratios of excess mean and volatility, u = (sigma_1 / mu~_1)^2.
template <class Scalar>
struct SharpeInputsT {
    Scalar lambda;
    Scalar a;
    Scalar b;
    Scalar u;
};
typedef SharpeInputsT<double> SharpeInputs;

SharpeInputs sharpe_inputs(const MarketParams& market);

/// Long-run Sharpe ratio per step of per-state allocations pi under stationary weights lambda.
template <class Derived>
double sharpe_general(const Eigen::MatrixBase<Derived>& pi, const Vector& lambda, const Vector& excess_mean,
                      const Vector& sigma) {
    const Vector m = excess_mean.cwiseProduct(pi);
    const double mean = lambda.dot(m);
    const Vector dev = m.array() - mean;
    const double var = lambda.dot((sigma.cwiseProduct(pi).array().square() + dev.array().square()).matrix());
    return mean / std::sqrt(var);
}

double sharpe_general(const Vector& pi, const MarketParams& market);

/// Closed-form Sharpe ratio per step of the cycle strategy in terms of (lambda, a, b, u).
template <class Scalar>
Scalar sharpe_delta(Scalar delta, const SharpeInputsT<Scalar>& in) {
    using std::sqrt;
    const Scalar q = Scalar(1) + delta;
    const Scalar den = Scalar(1) + in.lambda * (in.a * q - Scalar(1));
    if (!(den > Scalar(0)))
        fail(ErrorKind::Numerical, "DegenerateDenominator", "1 + lambda (a (1 + delta) - 1) must be positive");
    const Scalar one_l = Scalar(1) - in.lambda;
    const Scalar vol = in.u * (one_l + in.lambda * in.b * in.b * q * q) / (den * den);
    const Scalar disp = (one_l + in.lambda * in.a * in.a * q * q) / (den * den);
    return Scalar(1) / sqrt(vol + disp - Scalar(1));
}

/// Sign predicates with their margins; the predicate is `margin > 0`.
struct Predicate {
    bool value;
    double margin;
};

Predicate monotone_in_delta(double delta, const SharpeInputs& in);  ///< ds/d delta > 0

struct SensitivityPredicates {
    Predicate increasing_in_a;
    Predicate decreasing_in_b;
    Predicate increasing_in_lambda;
};

SensitivityPredicates sensitivity_predicates(const SharpeInputs& in, double delta);

/// Central second difference of sharpe_delta at delta = 0.
double concavity_at_zero(const SharpeInputs& in, double step = 1e-3);

/// Risk aversion table gamma(n, y), n = 0..T-1, whose equilibrium policy is the cycle strategy.
Matrix implied_gamma(double pi_bar, double delta, const MarketParams& market, int T);

inline double annualize_sharpe(double s_step, int steps_per_year) { return s_step * std::sqrt(double(steps_per_year)); }

}  // namespace robo_mv
