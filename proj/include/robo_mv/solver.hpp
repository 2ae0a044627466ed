#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "robo_mv/market.hpp"
#include "robo_mv/risk_profile.hpp"

namespace robo_mv {

enum class Pipeline {
    General,      ///< moments of (a', a'Z, b', b'Z, b'Z^2); valid with behavioral bias
    Independent,  ///< factorized moments; requires risk aversion independent of returns (beta = 0)
};

/// Discretization of the reduced state. Zero bounds on xi select an automatic span.
struct GridSpec {
    int xi_nodes = 81;
    double xi_min = 0.0;
    double xi_max = 0.0;
    int zsum_nodes = 41;
    double zsum_span_sd = 4.0;
    int quad_points = 16;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    Pipeline pipeline = Pipeline::General;
    int threads = 0;
    bool warped = true;  ///< interpolate in 1/kappa-like coordinates; false gives plain multilinear
};

/// Solver state. `xi` is the communicated level with the age and regime factors removed,
/// i.e. gamma_id_tau * gamma_Z_tau, so that gamma_n = exp(eta_n) * xi * gamma_bar_n(Y_n).
/// It equals the communicated xi whenever eta = 0 and gamma_bar = 1.
struct ReducedState {
    double xi;
    double prev_sum;
    double cur_sum;
    int regime;
};

/// Tensor grid; regime outermost, then log xi, previous and current window sums.
struct StateGrid {
    std::vector<double> log_xi;
    std::vector<double> prev;
    std::vector<double> cur;
    int regimes = 1;
    // Interpolation weights along each axis are linear in exp(warp * x) rather than x.
    double xi_warp = 0.0;
    double prev_warp = 0.0;
    double cur_warp = 0.0;

    std::size_t size() const { return static_cast<std::size_t>(regimes) * log_xi.size() * prev.size() * cur.size(); }
    std::size_t index(std::size_t i, std::size_t j, std::size_t k, int y) const {
        return ((static_cast<std::size_t>(y) * log_xi.size() + i) * prev.size() + j) * cur.size() + k;
    }
    ReducedState node(std::size_t idx) const;
    std::size_t cur_zero() const { return cur.size() / 2; }
    std::size_t prev_zero() const { return prev.size() / 2; }
};

struct PolicySlice {
    std::vector<double> pi;
    std::vector<double> a;
    std::vector<double> b;
    std::vector<double> value;
};

struct SolveDiagnostics {
    std::uint64_t lookups = 0;
    std::uint64_t clamped = 0;  ///< lookups landing outside the grid
    double clamp_fraction() const { return lookups ? static_cast<double>(clamped) / lookups : 0.0; }
};

/// Equilibrium policy and moment tables for n = 0..T-1 (a_T = b_T = 1 implicitly).
struct PolicyTables {
    MarketParams market;
    RiskProfileParams profile;
    GridSpec spec;
    int T = 0;
    StateGrid grid;
    std::vector<PolicySlice> slices;
    SolveDiagnostics diagnostics;

    double gamma(int n, std::size_t node) const;
    double gamma(int n, const ReducedState& s) const;

    /// Multilinear interpolation of a slice field; clamps off-grid queries.
    double interpolate(const std::vector<double>& field, const ReducedState& s, bool* clamped = nullptr) const;
    double allocation(int n, const ReducedState& s, bool* clamped = nullptr) const {
        return interpolate(slices.at(n).pi, s, clamped);
    }
};

StateGrid make_grid(const MarketParams& market, const RiskProfileParams& profile, int T, const GridSpec& spec);

struct StepMoments {
    double ma = 0.0;    ///< E[a']
    double maz = 0.0;   ///< E[a' Z~]
    double mb = 0.0;    ///< E[b']
    double mbz = 0.0;   ///< E[b' Z~]
    double mbz2 = 0.0;  ///< E[b' Z~^2]
};

/// One-step conditional moments from `node` at time n, using slice n+1 of `tables`
/// (all of slice n+1 must be populated; n = T-1 uses the terminal condition).
StepMoments step_moments(const PolicyTables& tables, int n, std::size_t node);

/// Equilibrium allocation from the general moment representation.
double allocation(const StepMoments& m, double gross_rate, double gamma);

/// Allocation when risk aversion is independent of the next return.
double allocation_independent(double ma, double mb, double gamma, double gross_rate, double excess_mean,
                              double variance);

struct MomentPair {
    double a;
    double b;
};

MomentPair update_ab(const StepMoments& m, double pi, double gross_rate);

double constrain(double pi, double lower, double upper);

/// Dollar position under the liquidation rule: nothing invested once wealth is negative.
double liquidation_overlay(double wealth, double pi);

PolicyTables solve(const MarketParams& market, const RiskProfileParams& profile, int T, const GridSpec& spec);

/// m-th moment of the gross return to T under the stored policy; entry n is a field over the grid.
/// Entry T is identically 1.
std::vector<std::vector<double>> moment_m(int m, const PolicyTables& tables);

/// Reference equilibrium for one regime and constant gamma, T <= 3, by grid search over
/// each allocation with later ones fixed and exact Gaussian moments of the compound return.
std::vector<double> brute_force_equilibrium(const MarketParams& market, double gamma, int T,
                                            double resolution = 1e-6);

/// Time-n objective E[r] - gamma/2 Var[r] of the return to T for deterministic allocations pi_n..pi_{T-1}.
double oracle_objective(const MarketParams& market, double gamma, const std::vector<double>& pi, int n);

}  // namespace robo_mv
