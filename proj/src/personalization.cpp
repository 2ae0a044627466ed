#include "robo_mv/personalization.hpp"

#include <cmath>
#include <numbers>

#include "robo_mv/error.hpp"
#include "robo_mv/parallel.hpp"

namespace robo_mv {

namespace {

const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);

struct PathStat {
    double value = 0.0;
    std::uint64_t excluded = 0;
    std::uint64_t counted = 0;
    std::uint64_t lookups = 0;
    std::uint64_t clamped = 0;
};

Estimate summarize(const std::vector<PathStat>& stats) {
    Estimate e;
    const double n = static_cast<double>(stats.size());
    double sum = 0.0;
    std::uint64_t lookups = 0, clamped = 0;
    for (const auto& s : stats) {
        sum += s.value;
        e.excluded += s.excluded;
        e.counted += s.counted;
        lookups += s.lookups;
        clamped += s.clamped;
    }
    e.clamp_fraction = lookups ? static_cast<double>(clamped) / lookups : 0.0;
    e.value = sum / n;
    double ss = 0.0;
    for (const auto& s : stats) ss += (s.value - e.value) * (s.value - e.value);
    e.se = stats.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    return e;
}

// Runs f(path_index, rng) over all paths in fixed blocks, one RNG stream per block.
template <class F>
void for_each_path(long n_paths, std::uint64_t seed, int threads, F&& f) {
    const std::size_t blocks = (static_cast<std::size_t>(n_paths) + kPathBlock - 1) / kPathBlock;
    parallel_for(blocks, threads, [&](std::size_t b) {
        Rng rng(seed, b);
        const std::size_t end = std::min(static_cast<std::size_t>(n_paths), (b + 1) * kPathBlock);
        for (std::size_t p = b * kPathBlock; p < end; ++p) f(p, rng);
    });
}

MarketParams maybe_frozen(const MarketParams& market, bool fast) {
    MarketParams m = market;
    if (fast) m.transition = Matrix::Identity(market.num_states(), market.num_states());
    return m;
}

}  // namespace

Estimate r_measure(int phi, double beta, const MarketParams& market, const RiskProfileParams& profile, int T,
                   const MeasureOptions& opt) {
    if (opt.n_paths < 100) fail(ErrorKind::Config, "TooFewPaths", "r_measure needs at least 100 paths");
    RiskProfileParams pr = profile;
    pr.phi = phi;
    pr.beta = beta;
    require_valid(market);
    require_valid(pr, market.num_states(), T);
    const MarketParams mk = maybe_frozen(market, opt.fast);

    std::vector<PathStat> stats(static_cast<std::size_t>(opt.n_paths));
    for_each_path(opt.n_paths, opt.seed, opt.threads, [&](std::size_t p, Rng& rng) {
        const MarketPath path = simulate_market_path(mk, opt.y0, T, rng);
        const ClientTrajectory tr = client_trajectory(path, mk, pr, rng);
        double s = 0.0;
        for (int n = 0; n < T; ++n) s += std::abs(tr.gamma_c[n] / tr.gamma[n] - 1.0);
        stats[p].value = s / T;
        stats[p].counted = static_cast<std::uint64_t>(T);
    });
    return summarize(stats);
}

double r_tilde(double phi, double beta, double sigma0, double p, double se) {
    const double A = beta * sigma0;
    return kSqrt2OverPi * (A / std::sqrt(phi) * (1.0 - (phi - 1.0) * p / 2.0) +
                           std::sqrt(A * A / phi + se * se) * (phi - 1.0) * p / 2.0);
}

double r_tilde_dphi(double phi, double beta, double sigma0, double p, double se) {
    const double A = beta * sigma0;
    const double g = std::sqrt(A * A / phi + se * se);
    const double d1 = A * (-0.5 * std::pow(phi, -1.5) * (1.0 - (phi - 1.0) * p / 2.0) - 0.5 * p / std::sqrt(phi));
    const double dg = g > 0.0 ? -A * A / (2.0 * phi * phi * g) : 0.0;
    const double d2 = dg * (phi - 1.0) * p / 2.0 + g * p / 2.0;
    return kSqrt2OverPi * (d1 + d2);
}

PhiStar phi_star(double beta, double sigma0, double p, double se, double phi_max) {
    PhiStar out;
    if (beta == 0.0) return out;
    if (p == 0.0) {
        out.unbounded = true;
        out.phi0 = phi_max;
        out.integer = static_cast<int>(phi_max);
        return out;
    }
    auto d = [&](double phi) { return r_tilde_dphi(phi, beta, sigma0, p, se); };
    if (d(1.0) >= 0.0) return out;
    if (d(phi_max) < 0.0) {
        out.unbounded = true;
        out.phi0 = phi_max;
        out.integer = static_cast<int>(phi_max);
        return out;
    }
    // The derivative changes sign once; bisect on it.
    double lo = 1.0, hi = phi_max;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (d(mid) < 0.0 ? lo : hi) = mid;
    }
    out.phi0 = 0.5 * (lo + hi);
    const double f = std::max(1.0, std::floor(out.phi0));
    const double c = std::ceil(out.phi0);
    out.integer = static_cast<int>(r_tilde(f, beta, sigma0, p, se) <= r_tilde(c, beta, sigma0, p, se) ? f : c);
    return out;
}

bool interact_every_step_suboptimal(double beta, double sigma0, double p, double se) {
    if (beta * sigma0 == 0.0) fail(ErrorKind::Numerical, "DivisionByZero", "beta * sigma0 must be positive");
    return r_tilde_dphi(1.0, beta, sigma0, p, se) < 0.0;
}

SandwichBand r_sandwich(int phi, int T, double beta, double sigma0, double p, double se_eps, double se,
                        double cushion) {
    const double lower_mult = std::floor(static_cast<double>(T) / phi) * phi;
    const double upper_mult = std::ceil(static_cast<double>(T) / phi) * phi;
    const double rt = r_tilde(phi, beta, sigma0, p, se_eps);
    const double pairs = 0.5 * phi * (phi - 1.0);
    const double err = pairs * p * p * se_eps * se_eps + beta * beta * sigma0 * sigma0;
    return {lower_mult / T * rt - err - cushion * se, upper_mult / T * rt + err + cushion * se, err};
}

Estimate s_measure(int phi, double beta, const MarketParams& market, const RiskProfileParams& profile, int T,
                   const GridSpec& grid, const MeasureOptions& opt) {
    if (opt.n_paths < 1) fail(ErrorKind::Config, "TooFewPaths", "s_measure needs paths");
    RiskProfileParams pa = profile, pb = profile;
    pa.phi = phi;
    pa.beta = beta;
    pb.phi = 1;
    pb.beta = 0.0;
    const MarketParams mk = maybe_frozen(market, opt.fast);
    const PolicyTables robo = solve(mk, pa, T, grid);
    const PolicyTables full = solve(mk, pb, T, grid);

    std::vector<PathStat> stats(static_cast<std::size_t>(opt.n_paths));
    for_each_path(opt.n_paths, opt.seed, opt.threads, [&](std::size_t p, Rng& rng) {
        const MarketPath path = simulate_market_path(mk, opt.y0, T, rng);
        const ClientTrajectory tr = client_trajectory(path, mk, pa, rng);
        PathStat& st = stats[p];
        double s = 0.0, prev = 0.0, cur = 0.0;
        for (int n = 0; n < T; ++n) {
            const int y = path.regime[n];
            const int tau = tr.tau[n];
            if (n == tau) {
                prev = n == 0 ? 0.0 : cur;
                cur = 0.0;
            }
            bool clamped = false;
            const double pi_a =
                robo.allocation(n, {tr.gamma_id[tau] * tr.gamma_z[n], prev, cur, y}, &clamped);
            ++st.lookups;
            st.clamped += clamped;
            const double pi_b = full.allocation(n, {tr.gamma_id[n], 0.0, 0.0, y});
            if (std::abs(pi_b) < 1e-10) {
                ++st.excluded;
            } else {
                s += std::abs(pi_a - pi_b) / std::abs(pi_b);
                ++st.counted;
            }
            cur += path.z[n] - mk.mu_step(y);
        }
        st.value = st.counted ? s / static_cast<double>(st.counted) : 0.0;
    });
    return summarize(stats);
}

}  // namespace robo_mv
