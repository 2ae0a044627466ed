#include "robo_mv/market.hpp"

#include <numeric>
#include <queue>

#include "robo_mv/error.hpp"

namespace robo_mv {

std::vector<std::string> validate(const MarketParams& p) {
    std::vector<std::string> errors;
    const Eigen::Index m = p.transition.rows();
    if (m < 1 || p.transition.cols() != m || p.risk_free.size() != m || p.mean_return.size() != m ||
        p.vol_return.size() != m) {
        errors.push_back("BadDimension: transition must be MxM with M-vectors of rates and moments");
        return errors;
    }
    if (p.steps_per_year < 1) errors.push_back("BadDimension: steps_per_year must be >= 1");
    for (Eigen::Index i = 0; i < m; ++i) {
        if ((p.transition.row(i).array() < 0.0).any())
            errors.push_back("NonStochasticRow: negative entry in row " + std::to_string(i + 1));
        const double s = p.transition.row(i).sum();
        if (std::abs(s - 1.0) > 1e-12)
            errors.push_back("NonStochasticRow: row " + std::to_string(i + 1) + " sums to " + std::to_string(s));
        if (!(p.vol_return(i) > 0.0))
            errors.push_back("NegativeVol: vol_return must be > 0 in state " + std::to_string(i + 1));
    }
    return errors;
}

void require_valid(const MarketParams& p) {
    const auto errors = validate(p);
    if (errors.empty()) return;
    const std::string& first = errors.front();
    const auto colon = first.find(':');
    fail(ErrorKind::Config, first.substr(0, colon), first.substr(colon + 2));
}

namespace {

// Reachability closure on the support graph.
std::vector<std::vector<bool>> reachability(const Matrix& P) {
    const int m = static_cast<int>(P.rows());
    std::vector<std::vector<bool>> reach(m, std::vector<bool>(m, false));
    for (int i = 0; i < m; ++i) {
        reach[i][i] = true;
        for (int j = 0; j < m; ++j)
            if (P(i, j) > 0.0) reach[i][j] = true;
    }
    for (int k = 0; k < m; ++k)
        for (int i = 0; i < m; ++i)
            if (reach[i][k])
                for (int j = 0; j < m; ++j)
                    if (reach[k][j]) reach[i][j] = true;
    return reach;
}

// Period of the class containing `root` from BFS levels: gcd of level[u] + 1 - level[v].
int class_period(const Matrix& P, const std::vector<int>& members, int root) {
    const int m = static_cast<int>(P.rows());
    std::vector<bool> in_class(m, false);
    for (int v : members) in_class[v] = true;
    std::vector<int> level(m, -1);
    std::queue<int> queue;
    level[root] = 0;
    queue.push(root);
    int g = 0;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop();
        for (int v = 0; v < m; ++v) {
            if (!in_class[v] || !(P(u, v) > 0.0)) continue;
            if (level[v] < 0) {
                level[v] = level[u] + 1;
                queue.push(v);
            } else {
                g = std::gcd(g, std::abs(level[u] + 1 - level[v]));
            }
        }
    }
    return g;
}

}  // namespace

Vector stationary_distribution(const Matrix& P) {
    const int m = static_cast<int>(P.rows());
    if (m == 1) return Vector::Ones(1);

    const auto reach = reachability(P);
    // A class is closed when nothing outside it is reachable from it.
    std::vector<int> closed_roots;
    std::vector<bool> seen(m, false);
    for (int i = 0; i < m; ++i) {
        if (seen[i]) continue;
        std::vector<int> cls;
        for (int j = 0; j < m; ++j)
            if (reach[i][j] && reach[j][i]) cls.push_back(j);
        for (int j : cls) seen[j] = true;
        bool closed = true;
        for (int j = 0; j < m && closed; ++j)
            if (reach[i][j] && !reach[j][i]) closed = false;
        if (closed) {
            if (class_period(P, cls, cls.front()) != 1)
                fail(ErrorKind::Numerical, "NonErgodic", "chain is periodic");
            closed_roots.push_back(i);
        }
    }
    if (closed_roots.size() != 1)
        fail(ErrorKind::Numerical, "NonErgodic", "chain has " + std::to_string(closed_roots.size()) + " closed classes");

    // (P^T - I) lambda = 0 with the last equation replaced by sum(lambda) = 1.
    Matrix A = P.transpose() - Matrix::Identity(m, m);
    A.row(m - 1).setOnes();
    Vector rhs = Vector::Zero(m);
    rhs(m - 1) = 1.0;
    Vector lambda = A.fullPivLu().solve(rhs);
    return lambda.cwiseMax(0.0) / lambda.cwiseMax(0.0).sum();
}

int sample_next_state(const Matrix& P, int y, Rng& rng) {
    const int m = static_cast<int>(P.cols());
    double u = rng.uniform();
    for (int j = 0; j < m - 1; ++j) {
        u -= P(y, j);
        if (u < 0.0) return j;
    }
    // Rounding leftovers land on the last state with positive probability.
    for (int j = m - 1; j > 0; --j)
        if (P(y, j) > 0.0) return j;
    return 0;
}

MarketStep sample_step(const MarketParams& p, int y, Rng& rng) {
    const double z = p.mu_step(y) + p.sigma_step(y) * rng.normal();
    return {sample_next_state(p.transition, y, rng), z};
}

ExcessMoments excess_moments(const MarketParams& p, int y) {
    const double s = p.sigma_step(y);
    return {p.excess_mean(y), s * s};
}

MarketParams single_state_market(double r, double mu, double sigma, int steps_per_year) {
    MarketParams p;
    p.transition = Matrix::Ones(1, 1);
    p.risk_free = Vector::Constant(1, r);
    p.mean_return = Vector::Constant(1, mu);
    p.vol_return = Vector::Constant(1, sigma);
    p.steps_per_year = steps_per_year;
    return p;
}

MarketParams business_cycle_market() {
    MarketParams p;
    p.transition.resize(2, 2);
    p.transition << 0.95, 0.05, 0.10, 0.90;
    p.risk_free.resize(2);
    p.risk_free << 0.015, 0.0;
    p.mean_return.resize(2);
    p.mean_return << 0.081, 0.137;
    p.vol_return.resize(2);
    p.vol_return << 0.155, 0.173;
    p.steps_per_year = 12;
    return p;
}

}  // namespace robo_mv
