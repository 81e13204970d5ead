#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dfa/rng.hpp"
#include "oracles.hpp"

using namespace dfa;

TEST_CASE("equal seeds give identical streams", "[rng]") {
    Rng a(42), b(42);
    for (int j = 0; j < 200; ++j) {
        CHECK(a.uniform() == b.uniform());
        CHECK(a.normal() == b.normal());
        CHECK(a.poisson(2.5) == b.poisson(2.5));
        CHECK(a.gamma(1.7, 0.8) == b.gamma(1.7, 0.8));
    }
}

TEST_CASE("derived seeds are stable and well spread", "[rng]") {
    CHECK(derive_seed(7, seed_tag("shard"), 0) == derive_seed(7, seed_tag("shard"), 0));
    CHECK(derive_seed(7, seed_tag("shard"), 0) != derive_seed(7, seed_tag("shard"), 1));
    CHECK(derive_seed(7, seed_tag("shard"), 0) != derive_seed(8, seed_tag("shard"), 0));
    CHECK(derive_seed(7, seed_tag("shard"), 0) != derive_seed(7, seed_tag("chain"), 0));
}

TEST_CASE("normal draws match standard moments", "[rng]") {
    Rng rng(1);
    const int N = 200000;
    double sum = 0.0, sq = 0.0;
    for (int j = 0; j < N; ++j) {
        const double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    const double mean = sum / N;
    const double var = sq / N - mean * mean;
    CHECK(std::fabs(mean) < 3.0 / std::sqrt(static_cast<double>(N)));
    CHECK(std::fabs(var - 1.0) < 3.0 * std::sqrt(2.0 / N));
}

TEST_CASE("truncated normal respects brackets", "[rng]") {
    Rng rng(2);
    for (int j = 0; j < 2000; ++j) {
        const double z = rng.truncated_normal(2.5, 0.25, 4.0, kInf);
        CHECK(z > 4.0);
    }
    for (int j = 0; j < 2000; ++j) {
        const double z = rng.truncated_normal(2.5, 0.25, -kInf, 1.0);
        CHECK(z <= 1.0);
    }
    // far tail stays finite and inside the bracket
    for (int j = 0; j < 500; ++j) {
        const double z = rng.truncated_normal(0.0, 1.0, 40.0, 41.0);
        CHECK(z >= 40.0);
        CHECK(z <= 41.0);
    }
}

TEST_CASE("truncated normal empirical mean matches the closed form", "[rng]") {
    Rng rng(3);
    const int N = 100000;
    double sum = 0.0, sq = 0.0;
    for (int j = 0; j < N; ++j) {
        const double z = rng.truncated_normal(2.5, 0.25, 2.0, 3.0);
        sum += z;
        sq += z * z;
    }
    const double mean = sum / N;
    const double sd = std::sqrt(sq / N - mean * mean);
    const double expected = oracle::truncated_normal_mean(2.5, 0.25, 2.0, 3.0);
    CHECK(std::fabs(mean - expected) < 3.0 * sd / std::sqrt(static_cast<double>(N)));
}

TEST_CASE("tau -> 0 collapses the truncated draw to the mean", "[rng]") {
    Rng rng(4);
    const double z = rng.truncated_normal(2.5, 1e-14, 2.0, 3.0);
    CHECK(z == Catch::Approx(2.5).margin(1e-9));
}

TEST_CASE("poisson and gamma and beta moments", "[rng]") {
    Rng rng(5);
    const int N = 100000;
    double psum = 0.0;
    for (int j = 0; j < N; ++j) psum += static_cast<double>(rng.poisson(3.0));
    CHECK(std::fabs(psum / N - 3.0) < 3.0 * std::sqrt(3.0 / N));

    double gsum = 0.0, gsq = 0.0;
    for (int j = 0; j < N; ++j) {
        const double x = rng.gamma(2.5, 2.0);
        gsum += x;
        gsq += x * x;
    }
    const double gmean = gsum / N;
    CHECK(std::fabs(gmean - 5.0) < 3.0 * std::sqrt(10.0 / N));
    CHECK(std::fabs(gsq / N - gmean * gmean - 10.0) < 0.35);

    double bsum = 0.0;
    for (int j = 0; j < N; ++j) bsum += rng.beta(4.0, 16.0);
    CHECK(std::fabs(bsum / N - 0.2) < 3.0 * std::sqrt(0.2 * 0.8 / 21.0 / N));

    double igsum = 0.0;
    for (int j = 0; j < N; ++j) igsum += rng.inverse_gamma(5.0, 1.0);
    CHECK(std::fabs(igsum / N - 0.25) < 3.0 * std::sqrt(0.0208333 / N));
}

TEST_CASE("uniform_int covers its range without bias", "[rng]") {
    Rng rng(6);
    std::vector<long> counts(7, 0);
    const int N = 70000;
    for (int j = 0; j < N; ++j) ++counts[rng.uniform_int(7)];
    for (long c : counts) CHECK(std::fabs(static_cast<double>(c) - N / 7.0) < 4.0 * std::sqrt(N / 7.0));
}
