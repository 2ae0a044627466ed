#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "robo_mv/error.hpp"
#include "robo_mv/montecarlo.hpp"
#include "robo_mv/solver.hpp"

using namespace robo_mv;

namespace {

// Monthly market with r = 0, mu = 10%, sigma = 20%, as one regime repeated twice so that
// the regime never changes but the two-state code paths are exercised.
MarketParams frozen_market() {
    MarketParams m;
    m.transition = Matrix::Identity(2, 2);
    m.risk_free = Vector::Zero(2);
    m.mean_return = Vector::Constant(2, 0.10);
    m.vol_return = Vector::Constant(2, 0.20);
    m.steps_per_year = 12;
    return m;
}

RiskProfileParams benchmark_profile() {
    RiskProfileParams p;
    p.phi = 3;
    p.gamma0 = 3.5;
    return p;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace

TEST_CASE("allocation formula edge cases") {
    StepMoments m{1.0, 0.05, 1.0, 0.05, 0.05 * 0.05 + 0.05};
    CHECK(allocation(m, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    StepMoments zero{1.0, 0.0, 1.0, 0.0, 0.04};
    CHECK(allocation(zero, 1.0, 3.0) == 0.0);
    StepMoments bad{1.0, 0.2, 1.0, 0.2, 0.04};
    CHECK_THROWS_AS(allocation(bad, 1.0, 3.0), Error);
    CHECK(allocation_independent(1.0, 1.0, 1.0, 1.0, 0.05, 0.05) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("constrain and liquidation overlay") {
    CHECK(constrain(1.4, 0.0, 1.0) == 1.0);
    CHECK(constrain(-0.2, 0.0, 1.0) == 0.0);
    CHECK(constrain(0.3, -INFINITY, INFINITY) == 0.3);
    CHECK(liquidation_overlay(-5.0, 0.6) == 0.0);
    CHECK(liquidation_overlay(100.0, 0.6) == doctest::Approx(60.0));
}

TEST_CASE("terminal slice is Markowitz at every node") {
    MarketParams m = business_cycle_market();
    RiskProfileParams p;
    p.alpha = 0.002;
    p.beta = 2.0;
    p.phi = 3;
    p.gamma0 = 3.0;
    p.gamma_bar = Matrix(1, 2);
    p.gamma_bar << 1.0, 1.3;
    GridSpec g;
    g.xi_nodes = 9;
    g.zsum_nodes = 5;
    const int T = 7;
    const PolicyTables pt = solve(m, p, T, g);
    double worst = 0.0;
    for (std::size_t idx = 0; idx < pt.grid.size(); ++idx) {
        const int y = pt.grid.node(idx).regime;
        const ExcessMoments em = excess_moments(m, y);
        const double target = em.mean / (pt.gamma(T - 1, idx) * em.variance);
        worst = std::max(worst, std::abs(pt.slices[T - 1].pi[idx] - target) / std::abs(target));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("terminal step moments are the moments of the excess return") {
    const MarketParams m = frozen_market();
    GridSpec g;
    g.xi_nodes = 1;
    const PolicyTables pt = solve(m, benchmark_profile(), 2, g);
    const StepMoments sm = step_moments(pt, 1, 0);
    const ExcessMoments em = excess_moments(m, 0);
    CHECK(sm.ma == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(sm.maz == doctest::Approx(em.mean).epsilon(1e-12));
    CHECK(sm.mbz2 == doctest::Approx(em.mean * em.mean + em.variance).epsilon(1e-12));
}

TEST_CASE("independence factorization of step moments") {
    const MarketParams m = single_state_market(0.04, 0.10, 0.20);
    GridSpec g;
    g.xi_nodes = 1;
    RiskProfileParams p;
    p.gamma0 = 3.5;
    const PolicyTables pt = solve(m, p, 6, g);
    for (int n = 0; n < 6; ++n) {
        const StepMoments sm = step_moments(pt, n, 0);
        CHECK(std::abs(sm.maz - sm.ma * m.excess_mean(0)) < 1e-10);
    }
}

TEST_CASE("solver matches the brute-force equilibrium for short horizons") {
    for (double r : {0.0, 0.04}) {
        const MarketParams m = single_state_market(r, 0.10, 0.20);
        for (double gamma : {2.5, 3.5, 4.5}) {
            for (int T = 1; T <= 3; ++T) {
                RiskProfileParams p;
                p.gamma0 = gamma;
                GridSpec g;
                g.xi_nodes = 1;
                const PolicyTables pt = solve(m, p, T, g);
                const std::vector<double> oracle = brute_force_equilibrium(m, gamma, T);
                for (int n = 0; n < T; ++n) CHECK(std::abs(pt.slices[n].pi[0] - oracle[n]) < 1e-4);
                const ExcessMoments em = excess_moments(m, 0);
                CHECK(pt.slices[T - 1].pi[0] == doctest::Approx(em.mean / (gamma * em.variance)).epsilon(1e-14));

                // No profitable one-shot deviation at time 0.
                std::vector<double> pi(T);
                for (int n = 0; n < T; ++n) pi[n] = pt.slices[n].pi[0];
                const double j = oracle_objective(m, gamma, pi, 0);
                for (double h : {-1e-3, 1e-3}) {
                    std::vector<double> q = pi;
                    q[0] += h;
                    CHECK(oracle_objective(m, gamma, q, 0) <= j);
                }
            }
        }
    }
}

TEST_CASE("constant gamma with r > 0: allocation rises toward the horizon") {
    const MarketParams m = single_state_market(0.04, 0.10, 0.20);
    RiskProfileParams p;
    p.gamma0 = 3.5;
    GridSpec g;
    g.xi_nodes = 1;
    const PolicyTables pt = solve(m, p, 36, g);
    for (int n = 0; n + 1 < 36; ++n) CHECK(pt.slices[n].pi[0] < pt.slices[n + 1].pi[0]);
}

TEST_CASE("zero allocation compounds at the risk-free rate") {
    const MarketParams m = single_state_market(0.04, 0.10, 0.20);
    RiskProfileParams p;
    p.gamma0 = 3.5;
    GridSpec g;
    g.xi_nodes = 1;
    g.lower = g.upper = 0.0;
    const int T = 10;
    const PolicyTables pt = solve(m, p, T, g);
    const double R = m.gross_rate(0);
    for (int n = 0; n < T; ++n) {
        CHECK(pt.slices[n].a[0] == doctest::Approx(std::pow(R, T - n)).epsilon(1e-13));
        CHECK(pt.slices[n].b[0] == doctest::Approx(std::pow(R, 2 * (T - n))).epsilon(1e-13));
    }
    const auto m3 = moment_m(3, pt);
    for (int n = 0; n < T; ++n) CHECK(m3[n][0] == doctest::Approx(std::pow(R, 3 * (T - n))).epsilon(1e-13));
}

TEST_CASE("biased solve: Jensen gap, value identity and moment recursion") {
    const MarketParams m = business_cycle_market();
    RiskProfileParams p;
    p.beta = 3.0;
    p.phi = 3;
    p.p_eps = 0.05;
    p.sigma_eps = 0.64;
    p.gamma0 = 3.5;
    GridSpec g;
    g.xi_nodes = 15;
    g.zsum_nodes = 7;
    const int T = 12;
    const PolicyTables pt = solve(m, p, T, g);
    double worst_jensen = 0.0, worst_value = 0.0;
    for (int n = 0; n < T; ++n)
        for (std::size_t idx = 0; idx < pt.grid.size(); ++idx) {
            const double a = pt.slices[n].a[idx], b = pt.slices[n].b[idx];
            worst_jensen = std::min(worst_jensen, b - a * a);
            const double v = a - 1.0 - 0.5 * pt.gamma(n, idx) * (b - a * a);
            worst_value = std::max(worst_value, std::abs(v - pt.slices[n].value[idx]));
        }
    CHECK(worst_jensen >= -1e-12);
    CHECK(worst_value < 1e-14);

    const auto m1 = moment_m(1, pt);
    const auto m2 = moment_m(2, pt);
    for (int n = 0; n < T; ++n) {
        CHECK(max_abs_diff(m1[n], pt.slices[n].a) < 1e-12);
        CHECK(max_abs_diff(m2[n], pt.slices[n].b) < 1e-12);
    }
}

TEST_CASE("general and independent pipelines agree without bias or shocks") {
    const MarketParams m = business_cycle_market();
    RiskProfileParams p;
    p.phi = 4;
    p.gamma0 = 3.5;
    p.gamma_bar = Matrix::Constant(1, 2, 1.2);
    GridSpec g;
    g.xi_nodes = 11;
    const PolicyTables general = solve(m, p, 24, g);
    g.pipeline = Pipeline::Independent;
    const PolicyTables indep = solve(m, p, 24, g);
    for (int n = 0; n < 24; ++n) {
        CHECK(max_abs_diff(general.slices[n].pi, indep.slices[n].pi) < 1e-8);
        CHECK(max_abs_diff(general.slices[n].b, indep.slices[n].b) < 1e-8);
    }
}

TEST_CASE("independent pipeline refuses biased profiles") {
    RiskProfileParams p = benchmark_profile();
    p.beta = 1.0;
    GridSpec g;
    g.pipeline = Pipeline::Independent;
    try {
        solve(frozen_market(), p, 6, g);
        FAIL("expected IndependenceViolated");
    } catch (const Error& e) {
        CHECK(e.code() == "IndependenceViolated");
    }
}

TEST_CASE("quadrature converges on the benchmark configuration") {
    const MarketParams m = frozen_market();
    GridSpec g16;
    const PolicyTables a = solve(m, benchmark_profile(), 36, g16);
    GridSpec g64;
    g64.quad_points = 64;
    const PolicyTables b = solve(m, benchmark_profile(), 36, g64);
    for (int n : {0, 11, 12, 35})
        for (std::size_t idx = 0; idx < a.grid.size(); idx += 7) {
            const StepMoments x = step_moments(a, n, idx), y = step_moments(b, n, idx);
            CHECK(std::abs(x.ma - y.ma) < 1e-8);
            CHECK(std::abs(x.maz - y.maz) < 1e-8);
            CHECK(std::abs(x.mb - y.mb) < 1e-8);
            CHECK(std::abs(x.mbz - y.mbz) < 1e-8);
            CHECK(std::abs(x.mbz2 - y.mbz2) < 1e-8);
        }
}

TEST_CASE("benchmark allocation decreases in risk aversion") {
    const PolicyTables pt = solve(frozen_market(), benchmark_profile(), 36, GridSpec{});
    double last = INFINITY;
    for (double gc = 1.0; gc <= 10.0; gc += 0.25) {
        const double pi = pt.allocation(12, {gc, 0.0, 0.0, 0});
        CHECK(pi < last);
        last = pi;
    }
}

TEST_CASE("bias lowers the allocation at a given current risk aversion") {
    RiskProfileParams p = benchmark_profile();
    const PolicyTables bench = solve(frozen_market(), p, 36, GridSpec{});
    p.beta = 4.0;
    const PolicyTables biased = solve(frozen_market(), p, 36, GridSpec{});
    for (double gc : {1.5, 2.0, 3.0, 3.5, 5.0, 8.0})
        CHECK(biased.allocation(12, {gc, 0.0, 0.0, 0}) < bench.allocation(12, {gc, 0.0, 0.0, 0}));
}

TEST_CASE("warped interpolation reproduces 1 / kappa at the next interaction exactly") {
    RiskProfileParams p = benchmark_profile();
    p.beta = 4.0;
    GridSpec spec;
    spec.xi_nodes = 11;
    spec.zsum_nodes = 7;
    PolicyTables pt;
    pt.grid = make_grid(frozen_market(), p, 12, spec);
    const StateGrid& g = pt.grid;
    const auto inv_kappa = [&](double xi, double prev, double cur) {
        return std::exp(-p.beta * (prev - cur) / p.phi) / xi;
    };
    std::vector<double> f(g.size());
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        const ReducedState s = g.node(idx);
        f[idx] = inv_kappa(s.xi, s.prev_sum, s.cur_sum);
    }
    const ReducedState q{3.1, 0.037, -0.052, 1};
    const double exact = inv_kappa(q.xi, q.prev_sum, q.cur_sum);
    CHECK(pt.interpolate(f, q) == doctest::Approx(exact).epsilon(1e-12));
    spec.warped = false;
    pt.grid = make_grid(frozen_market(), p, 12, spec);
    CHECK(std::abs(pt.interpolate(f, q) - exact) > 1e-4 * exact);
}

TEST_CASE("grid refinement changes allocations by less than 1e-3") {
    RiskProfileParams p = benchmark_profile();
    p.beta = 4.0;
    p.p_eps = 0.05;
    p.sigma_eps = 0.64;
    const MarketParams m = frozen_market();
    GridSpec coarse;
    const PolicyTables a = solve(m, p, 36, coarse);
    GridSpec fine = coarse;
    fine.xi_min = std::exp(a.grid.log_xi.front());
    fine.xi_max = std::exp(a.grid.log_xi.back());
    fine.xi_nodes = 2 * static_cast<int>(a.grid.log_xi.size()) - 1;
    fine.zsum_nodes = 2 * coarse.zsum_nodes - 1;
    const PolicyTables b = solve(m, p, 36, fine);
    double worst = 0.0;
    for (double gc : {2.0, 2.5, 3.0, 3.5, 4.0, 5.0})
        for (double z : {-0.05, 0.0, 0.05})
            for (int n : {0, 12, 24}) {
                const ReducedState s{gc, z, 0.0, 0};
                worst = std::max(worst, std::abs(a.allocation(n, s) - b.allocation(n, s)));
            }
    MESSAGE("max allocation change under grid doubling: " << worst);
    CHECK(worst < 1e-3);
}

TEST_CASE("simulated policy lookups rarely leave the grid") {
    for (double beta : {0.0, 4.0}) {
        RiskProfileParams p = benchmark_profile();
        p.beta = beta;
        p.p_eps = 0.05;
        p.sigma_eps = 0.64;
        const PolicyTables pt = solve(frozen_market(), p, 36, GridSpec{});
        SimConfig c;
        c.T = 36;
        c.n_paths = 20000;
        const PolicySimulation sim = simulate_policy(pt, c);
        MESSAGE("beta " << beta << " clamp fraction " << sim.clamp_fraction());
        CHECK(sim.clamp_fraction() <= 0.005);
    }
}

TEST_CASE("re-simulating the policy reproduces a0 and b0") {
    const MarketParams m = business_cycle_market();
    RiskProfileParams p;
    p.beta = 2.0;
    p.phi = 3;
    p.p_eps = 0.05;
    p.sigma_eps = 0.64;
    p.gamma0 = 3.5;
    const int T = 24;
    const PolicyTables pt = solve(m, p, T, GridSpec{});
    SimConfig c;
    c.T = T;
    c.n_paths = 100000;
    c.seed = 42;
    const PolicySimulation sim = simulate_policy(pt, c);
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (double x : sim.terminal_wealth) {
        s1 += x;
        s2 += x * x;
        s4 += x * x * x * x;
    }
    const double n = static_cast<double>(sim.terminal_wealth.size());
    const double mean = s1 / n, second = s2 / n;
    const double se1 = std::sqrt((second - mean * mean) / n);
    const double se2 = std::sqrt((s4 / n - second * second) / n);
    const ReducedState s0{p.gamma0, 0.0, 0.0, 0};
    CHECK(std::abs(mean - pt.interpolate(pt.slices[0].a, s0)) < 4 * se1);
    CHECK(std::abs(second - pt.interpolate(pt.slices[0].b, s0)) < 4 * se2);
}
