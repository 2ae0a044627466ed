#include <doctest.h>

#include <cmath>

#include "robo_mv/cycle_analytics.hpp"
#include "robo_mv/error.hpp"
#include "robo_mv/solver.hpp"

using namespace robo_mv;

namespace {

typedef SharpeInputsT<long double> WideInputs;

WideInputs widen(const SharpeInputs& in) { return {in.lambda, in.a, in.b, in.u}; }

// Central difference in extended precision so that the sign is reliable near zero.
template <class F>
long double central(F&& f, long double x, long double h) {
    return (f(x + h) - f(x - h)) / (2 * h);
}

SharpeInputs random_inputs(Rng& rng) {
    SharpeInputs in;
    in.lambda = 0.01 + 0.98 * rng.uniform();
    in.a = std::exp(std::log(0.2) + rng.uniform() * std::log(25.0));
    in.b = std::exp(std::log(0.2) + rng.uniform() * std::log(25.0));
    in.u = std::exp(rng.uniform() * std::log(200.0));
    return in;
}

MarketParams two_state(double lambda2, double m1, double m2, double s1, double s2) {
    MarketParams m;
    m.transition = Matrix(2, 2);
    // Stationary weight of state 2 is p12 / (p12 + p21).
    const double p21 = 0.2, p12 = p21 * lambda2 / (1.0 - lambda2);
    m.transition << 1.0 - p12, p12, p21, 1.0 - p21;
    m.risk_free = Vector::Zero(2);
    m.mean_return = Vector(2);
    m.mean_return << m1 * 12, m2 * 12;
    m.vol_return = Vector(2);
    m.vol_return << s1 * std::sqrt(12.0), s2 * std::sqrt(12.0);
    return m;
}

}  // namespace

TEST_CASE("single-state Sharpe ignores the allocation") {
    const MarketParams m = single_state_market(0.02, 0.09, 0.18);
    for (double pi : {0.1, 0.6, 3.0}) {
        Vector v(1);
        v << pi;
        CHECK(sharpe_general(v, m) == doctest::Approx(m.excess_mean(0) / m.sigma_step(0)).epsilon(1e-14));
    }
}

TEST_CASE("closed form equals the general formula") {
    const MarketParams m = business_cycle_market();
    const SharpeInputs in = sharpe_inputs(m);
    CHECK(in.lambda == doctest::Approx(1.0 / 3.0));
    for (double d : {-0.5, -0.3, 0.0, 0.3, 1.5}) {
        const CycleStrategy s{0.6, d};
        Vector pi(2);
        pi << s.allocation(0), s.allocation(1);
        CHECK(std::abs(sharpe_delta(d, in) - sharpe_general(pi, m)) < 1e-12);
    }
}

TEST_CASE("boundary identities") {
    SharpeInputs in{0.0, 2.1, 1.1, 66.0};
    for (double d : {-0.4, 0.0, 0.8}) CHECK(std::abs(sharpe_delta(d, in) - 1.0 / std::sqrt(in.u)) < 1e-12);
    in.lambda = 1.0;
    for (double d : {-0.4, 0.0, 0.8}) CHECK(std::abs(sharpe_delta(d, in) - in.a / (in.b * std::sqrt(in.u))) < 1e-12);
    in.lambda = 0.4;
    in.b = 1e8;
    CHECK(sharpe_delta(0.0, in) < 1e-7);
}

TEST_CASE("Sharpe never exceeds the best single-state ratio") {
    Rng rng(17);
    for (int i = 0; i < 10000; ++i) {
        const double l = 0.01 + 0.98 * rng.uniform();
        Vector lambda(2), mex(2), sig(2), pi(2);
        lambda << 1.0 - l, l;
        mex << 0.02 * rng.uniform(), 0.02 * rng.uniform();
        sig << 0.01 + 0.1 * rng.uniform(), 0.01 + 0.1 * rng.uniform();
        pi << 0.01 + 2.0 * rng.uniform(), 0.01 + 2.0 * rng.uniform();
        const double bound = std::max(mex(0) / sig(0), mex(1) / sig(1));
        const double s = sharpe_general(pi, lambda, mex, sig);
        CHECK(s >= 0.0);
        CHECK(s <= bound + 1e-12);
    }
}

TEST_CASE("large state-2 excess mean drives Sharpe to sqrt(lambda / (1 - lambda))") {
    const double l = 0.3;
    Vector lambda(2), sig(2), pi(2);
    lambda << 1.0 - l, l;
    sig << 0.05, 0.05;
    pi << 1.0, 1.0;
    Vector mex(2);
    mex << 0.005, 1e6;
    CHECK(sharpe_general(pi, lambda, mex, sig) == doctest::Approx(std::sqrt(l / (1.0 - l))).epsilon(1e-6));
}

TEST_CASE("closed form on a random two-state market") {
    const MarketParams m = two_state(0.25, 0.004, 0.009, 0.04, 0.055);
    const SharpeInputs in = sharpe_inputs(m);
    CHECK(in.lambda == doctest::Approx(0.25));
    CHECK(in.b == doctest::Approx(0.055 / 0.04));
    Vector pi(2);
    pi << 0.8, 0.8 * 1.7;
    CHECK(std::abs(sharpe_delta(0.7, in) - sharpe_general(pi, m)) < 1e-12);
}

TEST_CASE("predicates agree with finite-difference signs") {
    Rng rng(23);
    int checked = 0;
    for (int i = 0; i < 1000; ++i) {
        const SharpeInputs in = random_inputs(rng);
        const double delta = -0.9 + 2.9 * rng.uniform();
        const WideInputs w = widen(in);
        const long double h = 1e-7L;

        const Predicate md = monotone_in_delta(delta, in);
        const long double dd = central([&](long double d) { return sharpe_delta(d, w); }, delta, h);
        if (std::abs(md.margin) > 1e-8) {
            CHECK(md.value == (dd > 0));
            ++checked;
        }

        const SensitivityPredicates sp = sensitivity_predicates(in, delta);
        const long double da = central(
            [&](long double a) {
                WideInputs x = w;
                x.a = a;
                return sharpe_delta<long double>(delta, x);
            },
            in.a, h * in.a);
        if (std::abs(sp.increasing_in_a.margin) > 1e-8) CHECK(sp.increasing_in_a.value == (da > 0));

        const long double db = central(
            [&](long double b) {
                WideInputs x = w;
                x.b = b;
                return sharpe_delta<long double>(delta, x);
            },
            in.b, h * in.b);
        CHECK(sp.decreasing_in_b.value == (db < 0));

        const long double dl = central(
            [&](long double l) {
                WideInputs x = w;
                x.lambda = l;
                return sharpe_delta<long double>(delta, x);
            },
            in.lambda, h);
        if (std::abs(sp.increasing_in_lambda.margin) > 1e-8) CHECK(sp.increasing_in_lambda.value == (dl > 0));
    }
    CHECK(checked > 900);
}

TEST_CASE("predicates at the business-cycle inputs") {
    const SharpeInputs in = sharpe_inputs(business_cycle_market());
    CHECK(monotone_in_delta(0.0, in).value);
    CHECK(sensitivity_predicates(in, 0.0).increasing_in_a.value);
    CHECK(sensitivity_predicates(in, 0.0).decreasing_in_b.value);
    // With b = a the Sharpe ratio is minimized in lambda at 1 / (a + 1).
    SharpeInputs eq{0.0, 2.0, 2.0, 50.0};
    eq.lambda = 0.2;
    CHECK_FALSE(sensitivity_predicates(eq, 0.0).increasing_in_lambda.value);
    eq.lambda = 0.5;
    CHECK(sensitivity_predicates(eq, 0.0).increasing_in_lambda.value);
}

TEST_CASE("concavity at delta = 0") {
    SharpeInputs in = sharpe_inputs(business_cycle_market());
    const double c = concavity_at_zero(in);
    CHECK(c < 0.0);
    CHECK(concavity_at_zero(in, 5e-4) < 0.0);
    in.lambda = 0.0;
    CHECK(std::abs(concavity_at_zero(in)) < 1e-9);
    // Leading order is linear in lambda for small lambda.
    in.lambda = 1e-3;
    const double c1 = concavity_at_zero(in);
    in.lambda = 2e-3;
    const double c2 = concavity_at_zero(in);
    CHECK(c1 < 0.0);
    CHECK(c2 / c1 == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("implied gamma: one step is Markowitz") {
    const MarketParams m = business_cycle_market();
    const Matrix g = implied_gamma(0.6, 0.3, m, 1);
    for (int y = 0; y < 2; ++y) {
        const ExcessMoments em = excess_moments(m, y);
        CHECK(g(0, y) == doctest::Approx(em.mean / (CycleStrategy{0.6, 0.3}.allocation(y) * em.variance)).epsilon(1e-14));
    }
}

TEST_CASE("implied gamma reproduces the cycle strategy through the solver") {
    const MarketParams m = business_cycle_market();
    const int T = 24;
    for (double delta : {-0.3, 0.0, 0.3}) {
        const Matrix g = implied_gamma(0.6, delta, m, T);
        CHECK((g.array() > 0.0).all());
        CHECK(g.allFinite());
        RiskProfileParams p;
        p.gamma0 = 1.0;
        p.gamma_bar = Matrix(T + 1, 2);
        p.gamma_bar.topRows(T) = g;
        p.gamma_bar.row(T) = g.row(T - 1);
        GridSpec spec;
        spec.xi_nodes = 1;
        const PolicyTables pt = solve(m, p, T, spec);
        const CycleStrategy s{0.6, delta};
        for (int n = 0; n < T; ++n)
            for (int y = 0; y < 2; ++y) CHECK(std::abs(pt.slices[n].pi[pt.grid.index(0, 0, 0, y)] - s.allocation(y)) < 1e-8);
    }
}

TEST_CASE("single-state implied gamma with zero rate uses the closed form") {
    const MarketParams m = single_state_market(0.0, 0.10, 0.20);
    const Matrix g = implied_gamma(0.6, 0.0, m, 36);
    RiskProfileParams p;
    p.gamma_bar = Matrix(37, 1);
    p.gamma_bar.topRows(36) = g;
    p.gamma_bar.row(36) = g.row(35);
    GridSpec spec;
    spec.xi_nodes = 1;
    const PolicyTables pt = solve(m, p, 36, spec);
    for (int n = 0; n < 36; ++n) CHECK(std::abs(pt.slices[n].pi[0] - 0.6) < 1e-8);
}

TEST_CASE("implied gamma rejects bad strategies") {
    CHECK_THROWS_AS(implied_gamma(0.0, 0.0, business_cycle_market(), 5), Error);
    CHECK_THROWS_AS(implied_gamma(0.6, -1.0, business_cycle_market(), 5), Error);
}

TEST_CASE("annualization") { CHECK(annualize_sharpe(0.1, 12) == doctest::Approx(0.1 * std::sqrt(12.0))); }
