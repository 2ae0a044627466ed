#include "robo_mv/cycle_analytics.hpp"

namespace robo_mv {

SharpeInputs sharpe_inputs(const MarketParams& market) {
    if (market.num_states() != 2) fail(ErrorKind::Config, "BadDimension", "Sharpe inputs need two states");
    const Vector lambda = stationary_distribution(market);
    const double m1 = market.excess_mean(0), s1 = market.sigma_step(0);
    return {lambda(1), market.excess_mean(1) / m1, market.sigma_step(1) / s1, (s1 / m1) * (s1 / m1)};
}

double sharpe_general(const Vector& pi, const MarketParams& market) {
    const int m = market.num_states();
    Vector mex(m), sig(m);
    for (int y = 0; y < m; ++y) {
        mex(y) = market.excess_mean(y);
        sig(y) = market.sigma_step(y);
    }
    return sharpe_general(pi, stationary_distribution(market), mex, sig);
}

Predicate monotone_in_delta(double delta, const SharpeInputs& in) {
    const double margin = 1.0 + in.u - in.a * (1.0 + in.b * in.b * in.u / (in.a * in.a)) * (1.0 + delta);
    return {margin > 0.0, margin};
}

SensitivityPredicates sensitivity_predicates(const SharpeInputs& in, double delta) {
    const double q = 1.0 + delta;
    const double l = in.lambda, u = in.u, a = in.a, b = in.b;
    SensitivityPredicates out;
    // a < (1+u)/q + lambda/(1-lambda) u b^2 q, multiplied through by q (1 - lambda).
    const double ma = (1.0 + u) * (1.0 - l) + l * u * b * b * q * q - a * q * (1.0 - l);
    out.increasing_in_a = {ma > 0.0, ma};
    out.decreasing_in_b = {b > 0.0, b};
    // lambda (c-1) K > K - 2 (1+u)(c-1), with c = a q and K = (a^2 + u b^2) q^2 - (1+u).
    // Equivalent to the ratio bound on lambda when (c-1) K > 0 and reversed otherwise.
    const double c = a * q;
    const double K = (a * a + u * b * b) * q * q - (1.0 + u);
    const double ml = l * (c - 1.0) * K - (K - 2.0 * (1.0 + u) * (c - 1.0));
    out.increasing_in_lambda = {ml > 0.0, ml};
    return out;
}

double concavity_at_zero(const SharpeInputs& in, double h) {
    return (sharpe_delta(h, in) - 2.0 * sharpe_delta(0.0, in) + sharpe_delta(-h, in)) / (h * h);
}

Matrix implied_gamma(double pi_bar, double delta, const MarketParams& market, int T) {
    require_valid(market);
    if (!(pi_bar > 0.0) || !(delta > -1.0)) fail(ErrorKind::Config, "BadStrategy", "need pi_bar > 0 and delta > -1");
    if (T < 1) fail(ErrorKind::Config, "BadHorizon", "T must be >= 1");
    const int M = market.num_states();
    const CycleStrategy strat{pi_bar, delta};
    Matrix gamma(T, M);
    Vector a_next = Vector::Ones(M), b_next = Vector::Ones(M);
    for (int n = T - 1; n >= 0; --n) {
        Vector a(M), b(M);
        for (int y = 0; y < M; ++y) {
            const double R = market.gross_rate(y);
            const ExcessMoments em = excess_moments(market, y);
            const double target = strat.allocation(y);
            const double ma = market.transition.row(y).dot(a_next);
            const double mb = market.transition.row(y).dot(b_next);
            const double jensen = mb - ma * ma;
            const double den = mb + em.mean * em.mean / em.variance * jensen;
            auto h = [&](double x) { return em.mean / (x * em.variance) * (ma - R * x * jensen) / den - target; };
            if (!(em.mean > 0.0))
                fail(ErrorKind::Numerical, "RootBracketFailure", "excess mean must be positive in every state");
            double x;
            if (jensen <= 1e-15 * mb) {
                x = em.mean * ma / (target * em.variance * den);
            } else {
                // h decreases from +inf at 0 to -target at the upper end.
                double lo = 0.0, hi = ma / (R * jensen);
                if (!(h(hi * (1.0 - 1e-15)) < 0.0))
                    fail(ErrorKind::Numerical, "RootBracketFailure", "no sign change in h");
                for (int it = 0; it < 400 && hi - lo > 1e-12 * hi; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (h(mid) > 0.0 ? lo : hi) = mid;
                }
                x = 0.5 * (lo + hi);
            }
            gamma(n, y) = x;
            const double g1 = R + em.mean * target;
            a(y) = g1 * ma;
            b(y) = (g1 * g1 + em.variance * target * target) * mb;
        }
        a_next = a;
        b_next = b;
    }
    return gamma;
}

}  // namespace robo_mv
