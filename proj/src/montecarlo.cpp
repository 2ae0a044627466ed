#include "robo_mv/montecarlo.hpp"

#include <algorithm>
#include <cmath>

#include "robo_mv/error.hpp"
#include "robo_mv/parallel.hpp"

namespace robo_mv {

namespace {

template <class F>
void for_each_path(long n_paths, std::uint64_t seed, int threads, F&& f) {
    const std::size_t blocks = (static_cast<std::size_t>(n_paths) + kPathBlock - 1) / kPathBlock;
    parallel_for(blocks, threads, [&](std::size_t b) {
        Rng rng(seed, b);
        const std::size_t end = std::min(static_cast<std::size_t>(n_paths), (b + 1) * kPathBlock);
        for (std::size_t p = b * kPathBlock; p < end; ++p) f(p, rng);
    });
}

void check_config(const SimConfig& c, int num_states) {
    if (c.T < 1) fail(ErrorKind::Config, "BadHorizon", "T must be >= 1");
    if (c.n_paths < 1) fail(ErrorKind::Config, "BadPaths", "n_paths must be >= 1");
    if (!(c.x0 > 0.0)) fail(ErrorKind::Config, "BadWealth", "x0 must be > 0");
    if (c.y0 < 0 || c.y0 >= num_states) fail(ErrorKind::Config, "BadRegime", "initial regime out of range");
    if (!(c.lower <= c.upper)) fail(ErrorKind::Config, "BadBounds", "lower bound exceeds upper bound");
}

double position(const SimConfig& c, double wealth, double pi) {
    pi = constrain(pi, c.lower, c.upper);
    return c.liquidation ? liquidation_overlay(wealth, pi) : pi * wealth;
}

double sorted_quantile(const std::vector<double>& x, double p) {
    const double h = (static_cast<double>(x.size()) - 1.0) * p;
    const std::size_t i = static_cast<std::size_t>(std::floor(h));
    if (i + 1 >= x.size()) return x.back();
    return x[i] + (h - static_cast<double>(i)) * (x[i + 1] - x[i]);
}

}  // namespace

std::vector<double> simulate(const MarketParams& market, const CycleStrategy& strategy, const SimConfig& c) {
    require_valid(market);
    check_config(c, market.num_states());
    std::vector<double> out(static_cast<std::size_t>(c.n_paths));
    for_each_path(c.n_paths, c.seed, c.threads, [&](std::size_t p, Rng& rng) {
        double x = c.x0;
        int y = c.y0;
        for (int n = 0; n < c.T; ++n) {
            const MarketStep s = sample_step(market, y, rng);
            x = market.gross_rate(y) * x + (s.z - market.r_step(y)) * position(c, x, strategy.allocation(y));
            y = s.next;
        }
        out[p] = (x - c.x0) / c.x0;
    });
    return out;
}

PolicySimulation simulate_policy(const PolicyTables& tables, const SimConfig& c) {
    const MarketParams& market = tables.market;
    check_config(c, market.num_states());
    if (c.T != tables.T) fail(ErrorKind::Config, "BadHorizon", "simulation horizon must match the policy");
    PolicySimulation out;
    out.returns.resize(static_cast<std::size_t>(c.n_paths));
    out.terminal_wealth.resize(static_cast<std::size_t>(c.n_paths));
    std::vector<std::uint64_t> clamped(out.returns.size(), 0);
    for_each_path(c.n_paths, c.seed, c.threads, [&](std::size_t p, Rng& rng) {
        const MarketPath path = simulate_market_path(market, c.y0, c.T, rng);
        const ClientTrajectory tr = client_trajectory(path, market, tables.profile, rng);
        double x = c.x0, prev = 0.0, cur = 0.0;
        for (int n = 0; n < c.T; ++n) {
            const int y = path.regime[n];
            const int tau = tr.tau[n];
            if (n == tau) {
                prev = n == 0 ? 0.0 : cur;
                cur = 0.0;
            }
            bool off = false;
            const double pi = tables.allocation(n, {tr.gamma_id[tau] * tr.gamma_z[n], prev, cur, y}, &off);
            clamped[p] += off;
            x = market.gross_rate(y) * x + (path.z[n] - market.r_step(y)) * position(c, x, pi);
            cur += path.z[n] - market.mu_step(y);
        }
        out.terminal_wealth[p] = x;
        out.returns[p] = (x - c.x0) / c.x0;
    });
    out.lookups = static_cast<std::uint64_t>(c.n_paths) * static_cast<std::uint64_t>(c.T);
    for (auto v : clamped) out.clamped += v;
    return out;
}

double quantile(std::vector<double> x, double p) {
    std::sort(x.begin(), x.end());
    return sorted_quantile(x, p);
}

StatsSummary stats(std::span<const double> x) {
    if (x.size() < 2) fail(ErrorKind::Numerical, "InsufficientSamples", "stats need at least two samples");
    const long double n = static_cast<long double>(x.size());
    long double s = 0.0L;
    for (double v : x) s += v;
    const long double mean = s / n;
    long double m2 = 0.0L, m3 = 0.0L, m4 = 0.0L;
    for (double v : x) {
        const long double d = v - mean, d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    StatsSummary out;
    out.count = x.size();
    out.mean = static_cast<double>(mean);
    out.sd = static_cast<double>(std::sqrt(m2 / (n - 1.0L)));
    m2 /= n;
    m3 /= n;
    m4 /= n;
    out.skewness = m2 > 0.0L ? static_cast<double>(m3 / std::pow(m2, 1.5L)) : 0.0;
    out.kurtosis = m2 > 0.0L ? static_cast<double>(m4 / (m2 * m2)) : 0.0;
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    auto q = [&](double p) { return sorted_quantile(sorted, p); };
    out.var90 = -q(0.10);
    out.var95 = -q(0.05);
    out.var99 = -q(0.01);
    return out;
}

std::vector<double> annualized(std::span<const double> returns, int T, int k, std::uint64_t* excluded) {
    std::vector<double> out;
    out.reserve(returns.size());
    std::uint64_t dropped = 0;
    const double power = static_cast<double>(k) / T;
    for (double r : returns) {
        if (r <= -1.0) {
            ++dropped;
            continue;
        }
        out.push_back(std::pow(1.0 + r, power) - 1.0);
    }
    if (excluded) *excluded = dropped;
    return out;
}

SharpeEstimate long_run_sharpe(const MarketParams& market, const CycleStrategy& strategy, long total_steps,
                               std::uint64_t seed, int y0, int batches) {
    require_valid(market);
    if (total_steps < 10000) fail(ErrorKind::Config, "TooFewSteps", "long_run_sharpe needs >= 1e4 steps");
    Rng rng(seed, 0);
    const long per_batch = total_steps / batches;
    std::vector<double> batch_sharpe;
    long double s1 = 0.0L, s2 = 0.0L;
    long count = 0;
    int y = y0;
    for (int b = 0; b < batches; ++b) {
        long double b1 = 0.0L, b2 = 0.0L;
        const long steps = b + 1 == batches ? total_steps - per_batch * (batches - 1) : per_batch;
        for (long i = 0; i < steps; ++i) {
            const MarketStep s = sample_step(market, y, rng);
            const double e = strategy.allocation(y) * (s.z - market.r_step(y));
            b1 += e;
            b2 += static_cast<long double>(e) * e;
            y = s.next;
        }
        const long double m = b1 / steps;
        batch_sharpe.push_back(static_cast<double>(m / std::sqrt(b2 / steps - m * m)));
        s1 += b1;
        s2 += b2;
        count += steps;
    }
    const long double mean = s1 / count;
    SharpeEstimate out;
    out.value = static_cast<double>(mean / std::sqrt(s2 / count - mean * mean));
    double bm = 0.0, bv = 0.0;
    for (double v : batch_sharpe) bm += v;
    bm /= batches;
    for (double v : batch_sharpe) bv += (v - bm) * (v - bm);
    out.se = std::sqrt(bv / (batches - 1.0) / batches);
    return out;
}

std::vector<HistogramBin> histogram(std::span<const double> x, int bins) {
    if (x.empty() || bins < 1) return {};
    const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
    const double lo = *lo_it;
    const double hi = *hi_it > lo ? *hi_it : lo + 1.0;
    const double w = (hi - lo) / bins;
    std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
    for (int i = 0; i < bins; ++i) out[i] = {lo + i * w, lo + (i + 1) * w, 0};
    for (double v : x) {
        int i = static_cast<int>((v - lo) / w);
        out[std::clamp(i, 0, bins - 1)].count++;
    }
    return out;
}

}  // namespace robo_mv
