#include "robo_mv/quadrature.hpp"

#include <cmath>
#include <vector>

#include "robo_mv/error.hpp"

namespace robo_mv {

QuadratureRule gauss_hermite(int n) {
    if (n < 1) fail(ErrorKind::Config, "BadQuadrature", "need at least one node");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
        jacobi(k, k - 1) = jacobi(k - 1, k);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    QuadratureRule rule;
    rule.nodes = eig.eigenvalues();
    rule.weights = eig.eigenvectors().row(0).transpose().array().square();
    rule.weights /= rule.weights.sum();
    // Symmetrize to kill rounding asymmetry; odd moments then vanish exactly.
    for (int i = 0; i < n / 2; ++i) {
        const int j = n - 1 - i;
        const double x = 0.5 * (rule.nodes(j) - rule.nodes(i));
        const double w = 0.5 * (rule.weights(i) + rule.weights(j));
        rule.nodes(i) = -x;
        rule.nodes(j) = x;
        rule.weights(i) = rule.weights(j) = w;
    }
    if (n % 2 == 1) rule.nodes(n / 2) = 0.0;
    return rule;
}

QuadratureRule shock_mixture(int steps, double p_eps, double sigma_eps, int quad_points, double cutoff) {
    const QuadratureRule gh = gauss_hermite(quad_points);
    std::vector<double> x, w;
    double total = 0.0;
    for (int j = 0; j <= steps; ++j) {
        const double log_pj = std::lgamma(steps + 1.0) - std::lgamma(j + 1.0) - std::lgamma(steps - j + 1.0) +
                              (j > 0 ? j * std::log(p_eps) : 0.0) +
                              (steps - j > 0 ? (steps - j) * std::log1p(-p_eps) : 0.0);
        const double pj = std::exp(log_pj);
        if (!(pj > cutoff)) continue;
        if (j == 0 || sigma_eps == 0.0) {
            x.push_back(-0.5 * j * sigma_eps * sigma_eps);
            w.push_back(pj);
        } else {
            const double sd = sigma_eps * std::sqrt(static_cast<double>(j));
            for (Eigen::Index q = 0; q < gh.size(); ++q) {
                x.push_back(-0.5 * sd * sd + sd * gh.nodes(q));
                w.push_back(pj * gh.weights(q));
            }
        }
        total += pj;
    }
    QuadratureRule rule;
    rule.nodes = Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    rule.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())) / total;
    return rule;
}

}  // namespace robo_mv
