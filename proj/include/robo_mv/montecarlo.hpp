#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "robo_mv/cycle_analytics.hpp"
#include "robo_mv/market.hpp"
#include "robo_mv/solver.hpp"

namespace robo_mv {

struct SimConfig {
    int T = 120;
    long n_paths = 200000;
    std::uint64_t seed = 1;
    int y0 = 0;
    double x0 = 1.0;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    bool liquidation = false;
    int threads = 0;
};

/// Total returns (X_T - x0)/x0 per path under the cycle strategy.
std::vector<double> simulate(const MarketParams& market, const CycleStrategy& strategy, const SimConfig& config);

struct PolicySimulation {
    std::vector<double> returns;
    std::vector<double> terminal_wealth;
    std::uint64_t lookups = 0;
    std::uint64_t clamped = 0;
    double clamp_fraction() const { return lookups ? static_cast<double>(clamped) / lookups : 0.0; }
};

/// Total returns under a solved policy, with the client's risk aversion simulated alongside.
/// The initial reduced state is (gamma0, 0, 0, y0).
PolicySimulation simulate_policy(const PolicyTables& tables, const SimConfig& config);

struct StatsSummary {
    double mean = 0.0;
    double sd = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0;  ///< raw, not excess
    double var90 = 0.0;
    double var95 = 0.0;
    double var99 = 0.0;
    std::size_t count = 0;
};

StatsSummary stats(std::span<const double> sample);

/// Linear-interpolation quantile of a sample at level p.
double quantile(std::vector<double> sample, double p);

/// (1 + r)^(k/T) - 1 per path; paths with r <= -1 are dropped and counted.
std::vector<double> annualized(std::span<const double> returns, int T, int steps_per_year,
                               std::uint64_t* excluded = nullptr);

struct SharpeEstimate {
    double value;
    double se;
};

/// Sharpe ratio of pooled per-step excess returns pi * Z~ over one long path; SE by batch means.
SharpeEstimate long_run_sharpe(const MarketParams& market, const CycleStrategy& strategy, long total_steps,
                               std::uint64_t seed, int y0 = 0, int batches = 100);

struct HistogramBin {
    double left;
    double right;
    std::uint64_t count;
};

std::vector<HistogramBin> histogram(std::span<const double> sample, int bins);

}  // namespace robo_mv
