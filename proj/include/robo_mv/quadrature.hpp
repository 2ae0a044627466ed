#pragma once

#include <Eigen/Dense>

namespace robo_mv {

/// Nodes and weights for expectations E[f(X)] ~ sum_i w_i f(x_i).
struct QuadratureRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;

    Eigen::Index size() const { return nodes.size(); }
};

/// Gauss-Hermite rule for a standard normal (probabilists' weight), via Golub-Welsch.
QuadratureRule gauss_hermite(int n);

/// Law of the summed idiosyncratic shock over `steps` steps: J ~ Bin(steps, p) jumps,
/// and given J the sum is N(-J s^2/2, J s^2). Terms with probability below `cutoff`
/// are dropped and the remaining weights renormalized.
QuadratureRule shock_mixture(int steps, double p_eps, double sigma_eps, int quad_points,
                             double cutoff = 1e-15);

}  // namespace robo_mv
