#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dfa/stats.hpp"

using namespace dfa;

TEST_CASE("normal CDF reference values", "[stats]") {
    CHECK(norm_cdf(0.0) == Catch::Approx(0.5).epsilon(1e-14));
    CHECK(norm_cdf(2.0) - norm_cdf(-2.0) == Catch::Approx(0.9544997361036416).epsilon(1e-12));
    CHECK(norm_cdf(-6.0) == Catch::Approx(9.865876450376946e-10).epsilon(1e-9));
    CHECK(norm_cdf(-1.959963984540054) == Catch::Approx(0.025).epsilon(1e-10));
}

TEST_CASE("log normal CDF agrees with direct evaluation in range", "[stats]") {
    for (double x = -35.0; x <= 6.0; x += 0.37) {
        const double direct = std::log(norm_cdf(x));
        CHECK(log_norm_cdf(x) == Catch::Approx(direct).margin(1e-12 * std::fabs(direct) + 1e-13));
    }
}

TEST_CASE("log normal CDF is smooth across the tail switch", "[stats]") {
    const double a = log_norm_cdf(-35.999);
    const double b = log_norm_cdf(-36.001);
    // d/dx logPhi ~ 36 near x = -36
    CHECK(std::fabs((a - b) - 0.002 * 36.0) < 0.01);
    CHECK(std::isfinite(log_norm_cdf(-300.0)));
    CHECK(log_norm_cdf(-300.0) < -44000.0);
}

TEST_CASE("normal quantile round trips", "[stats]") {
    for (double p : {1e-12, 1e-6, 0.001, 0.025, 0.3, 0.5, 0.7, 0.975, 0.999, 1.0 - 1e-9}) {
        const double x = norm_ppf(p);
        CHECK(norm_cdf(x) == Catch::Approx(p).epsilon(1e-10));
    }
    CHECK(norm_ppf(0.975) == Catch::Approx(1.959963984540054).epsilon(1e-12));
}

TEST_CASE("log-space quantile handles extreme tails", "[stats]") {
    for (double lp : {-2.0, -10.0, -100.0, -1000.0, -50000.0}) {
        const double x = norm_ppf_from_log(lp);
        CHECK(log_norm_cdf(x) == Catch::Approx(lp).epsilon(1e-10));
    }
}

TEST_CASE("harmonic numbers", "[stats]") {
    CHECK(harmonic_number(1) == Catch::Approx(1.0));
    CHECK(harmonic_number(100) == Catch::Approx(5.187377517639621).epsilon(1e-14));
}

TEST_CASE("incomplete gamma and chi-square tail", "[stats]") {
    CHECK(gamma_p(2.0, 0.0) == 0.0);
    for (double a : {0.5, 2.0, 7.5})
        for (double x : {0.1, 1.0, 5.0, 20.0})
            CHECK(gamma_p(a, x) + gamma_q(a, x) == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(chi2_sf(3.841458820694124, 1.0) == Catch::Approx(0.05).epsilon(1e-8));
    CHECK(chi2_sf(18.307038053275146, 10.0) == Catch::Approx(0.05).epsilon(1e-8));
}
