#include <doctest.h>

#include <cmath>

#include "robo_mv/error.hpp"
#include "robo_mv/market.hpp"

using namespace robo_mv;

namespace {

std::string error_code(const MarketParams& m) {
    try {
        require_valid(m);
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

std::string stationary_error(const Matrix& P) {
    try {
        stationary_distribution(P);
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

}  // namespace

TEST_CASE("business cycle chain has stationary weights 2/3 and 1/3") {
    const MarketParams m = business_cycle_market();
    const Vector lambda = stationary_distribution(m);
    CHECK(lambda(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(lambda(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    const Vector residual = m.transition.transpose() * lambda - lambda;
    CHECK(residual.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("stationary weights satisfy balance on a random 4-state chain") {
    Rng rng(7);
    Matrix P(4, 4);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) P(i, j) = 0.05 + rng.uniform();
        P.row(i) /= P.row(i).sum();
    }
    const Vector lambda = stationary_distribution(P);
    CHECK(std::abs(lambda.sum() - 1.0) < 1e-12);
    CHECK((P.transpose() * lambda - lambda).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("single state chain") {
    Matrix P(1, 1);
    P << 1.0;
    CHECK(stationary_distribution(P)(0) == 1.0);
}

TEST_CASE("transient states get zero weight") {
    Matrix P(3, 3);
    P << 0.5, 0.5, 0.0,
         0.0, 0.3, 0.7,
         0.0, 0.6, 0.4;
    const Vector lambda = stationary_distribution(P);
    CHECK(std::abs(lambda(0)) < 1e-14);
    CHECK(lambda(1) == doctest::Approx(6.0 / 13.0));
}

TEST_CASE("non-ergodic chains are rejected") {
    CHECK(stationary_error(Matrix::Identity(2, 2)) == "NonErgodic");
    Matrix flip(2, 2);
    flip << 0.0, 1.0, 1.0, 0.0;
    CHECK(stationary_error(flip) == "NonErgodic");
}

TEST_CASE("validation reports the offending field") {
    MarketParams m = business_cycle_market();
    CHECK(validate(m).empty());

    MarketParams bad_row = m;
    bad_row.transition(0, 0) = 0.9;
    CHECK(error_code(bad_row) == "NonStochasticRow");

    MarketParams negative = m;
    negative.transition << 1.1, -0.1, 0.1, 0.9;
    CHECK(error_code(negative) == "NonStochasticRow");

    MarketParams vol = m;
    vol.vol_return(1) = -0.1;
    CHECK(error_code(vol) == "NegativeVol");

    MarketParams dims = m;
    dims.mean_return = Vector::Zero(3);
    CHECK(error_code(dims) == "BadDimension");
}

TEST_CASE("per-step conversion") {
    const MarketParams m = business_cycle_market();
    CHECK(m.r_step(0) == doctest::Approx(0.015 / 12));
    CHECK(m.gross_rate(0) == doctest::Approx(1.0 + 0.015 / 12));
    CHECK(m.sigma_step(1) == doctest::Approx(0.173 / std::sqrt(12.0)));
    const ExcessMoments em = excess_moments(m, 1);
    CHECK(em.mean == doctest::Approx(0.137 / 12));
    CHECK(em.variance == doctest::Approx(0.173 * 0.173 / 12));
}

TEST_CASE("simulated occupation matches stationary weights") {
    const MarketParams m = business_cycle_market();
    Rng rng(11);
    const long steps = 2000000;
    long in_two = 0;
    int y = 0;
    for (long i = 0; i < steps; ++i) {
        y = sample_next_state(m.transition, y, rng);
        in_two += y;
    }
    // Autocorrelation of the chain is 0.85, so the variance inflates by (1+0.85)/(1-0.85).
    const double inflation = 1.85 / 0.15;
    const double se = std::sqrt(inflation * (1.0 / 3.0) * (2.0 / 3.0) / steps);
    CHECK(std::abs(static_cast<double>(in_two) / steps - 1.0 / 3.0) < 4 * se);
}

TEST_CASE("return draws have the per-step mean and variance") {
    const MarketParams m = business_cycle_market();
    Rng rng(3);
    const int n = 400000;
    double s = 0.0, s2 = 0.0;
    int switched = 0;
    for (int i = 0; i < n; ++i) {
        const MarketStep st = sample_step(m, 1, rng);
        s += st.z;
        s2 += st.z * st.z;
        switched += st.next == 0;
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    const double sd = m.sigma_step(1);
    CHECK(std::abs(mean - m.mu_step(1)) < 4 * sd / std::sqrt(double(n)));
    CHECK(std::abs(var / (sd * sd) - 1.0) < 4 * std::sqrt(2.0 / n));
    CHECK(std::abs(switched / double(n) - 0.1) < 4 * std::sqrt(0.09 / n));
}
