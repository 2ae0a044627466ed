#include <cmath>

#include "robo_mv/error.hpp"
#include "robo_mv/solver.hpp"

namespace robo_mv {

double oracle_objective(const MarketParams& market, double gamma, const std::vector<double>& pi, int n) {
    const double R = market.gross_rate(0);
    const ExcessMoments em = excess_moments(market, 0);
    // Independent one-step factors: the moments of the product are products of moments.
    double mean = 1.0, second = 1.0;
    for (std::size_t k = static_cast<std::size_t>(n); k < pi.size(); ++k) {
        const double g = R + em.mean * pi[k];
        mean *= g;
        second *= g * g + em.variance * pi[k] * pi[k];
    }
    return mean - 1.0 - 0.5 * gamma * (second - mean * mean);
}

std::vector<double> brute_force_equilibrium(const MarketParams& market, double gamma, int T, double resolution) {
    if (market.num_states() != 1) fail(ErrorKind::Config, "BadOracle", "oracle needs a single-state market");
    if (T < 1 || T > 3) fail(ErrorKind::Config, "BadOracle", "oracle supports 1 <= T <= 3");
    std::vector<double> pi(static_cast<std::size_t>(T), 0.0);
    for (int n = T - 1; n >= 0; --n) {
        auto search = [&](double lo, double hi, double step) {
            double best = lo, best_j = -INFINITY;
            const long count = std::lround((hi - lo) / step);
            for (long i = 0; i <= count; ++i) {
                pi[n] = lo + i * step;
                const double j = oracle_objective(market, gamma, pi, n);
                if (j > best_j) {
                    best_j = j;
                    best = pi[n];
                }
            }
            return best;
        };
        double center = search(-20.0, 20.0, 1e-3);
        center = search(center - 2e-3, center + 2e-3, resolution);
        pi[n] = center;
    }
    return pi;
}

}  // namespace robo_mv
