#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "dfa/ibp.hpp"
#include "dfa/rng.hpp"

using namespace dfa;

TEST_CASE("conditional inclusion probability", "[ibp]") {
    CHECK(conditional_inclusion_prob(4, 10) == Catch::Approx(0.4));
    CHECK(conditional_inclusion_prob(0, 10) == 0.0);
    CHECK(conditional_inclusion_prob(9, 10) == Catch::Approx(0.9));
    CHECK_THROWS(conditional_inclusion_prob(10, 10));
    CHECK_THROWS(conditional_inclusion_prob(-1, 10));
    CHECK_THROWS(conditional_inclusion_prob(0, 0));
}

TEST_CASE("log prior closed forms", "[ibp]") {
    CHECK(log_prior(BinaryMatrix(3, 0), 3.0) == Catch::Approx(-5.5).epsilon(1e-12));
    BinaryMatrix one(1, 1);
    one.set(0, 0, 1);
    CHECK(log_prior(one, 3.0) == Catch::Approx(std::log(3.0) - 3.0).epsilon(1e-12));
    BinaryMatrix zero_col(2, 1);
    CHECK_THROWS(log_prior(zero_col, 3.0));
}

TEST_CASE("log prior is exchangeable in rows and columns", "[ibp]") {
    Rng rng(21);
    const int m = 7, K = 4;
    BinaryMatrix A(m, K);
    for (int k = 0; k < K; ++k) {
        int ones = 0;
        for (int u = 0; u < m; ++u) {
            const int v = rng.bernoulli(0.5) ? 1 : 0;
            A.set(u, k, v);
            ones += v;
        }
        if (ones == 0) A.set(static_cast<int>(rng.uniform_int(m)), k, 1);
    }
    const double base = log_prior(A, 2.0);

    BinaryMatrix col_perm(m, K);
    const std::vector<int> cp{3, 1, 0, 2};
    for (int k = 0; k < K; ++k)
        for (int u = 0; u < m; ++u) col_perm.set(u, k, A(u, cp[k]));
    CHECK(log_prior(col_perm, 2.0) == Catch::Approx(base).epsilon(1e-13));

    BinaryMatrix row_perm(m, K);
    const std::vector<int> rp{6, 0, 3, 1, 5, 2, 4};
    for (int u = 0; u < m; ++u)
        for (int k = 0; k < K; ++k) row_perm.set(u, k, A(rp[u], k));
    CHECK(log_prior(row_perm, 2.0) == Catch::Approx(base).epsilon(1e-13));
}

TEST_CASE("expected feature count", "[ibp]") {
    CHECK(expected_features(1, 3.0) == Catch::Approx(3.0));
    CHECK(expected_features(100, 3.0) == Catch::Approx(15.562132552918864).epsilon(1e-12));
    CHECK(expected_features(50, 0.0) == 0.0);
}

TEST_CASE("prior samples have no empty columns and match E[K]", "[ibp][slow]") {
    const std::vector<std::pair<int, double>> settings{{10, 1.0}, {50, 3.0}, {100, 3.0}};
    for (auto [m, lambda] : settings) {
        Rng rng(derive_seed(99, seed_tag("ibp-mc"), static_cast<std::uint64_t>(m)));
        const int N = 2000;
        double sum = 0.0;
        for (int j = 0; j < N; ++j) {
            const auto sample = sample_prior(m, lambda, rng);
            for (int k = 0; k < sample.K(); ++k) CHECK(sample.A.col_sum(k) > 0);
            sum += sample.K();
        }
        const double expected = expected_features(m, lambda);
        // K is a sum of independent Poissons, so Var K = E K
        const double se = std::sqrt(expected / N);
        CHECK(std::fabs(sum / N - expected) < 3.0 * se);
    }
}

namespace {

// canonical key for the unordered column multiset of a 2-row matrix
std::vector<int> canonical_cols(const BinaryMatrix& A) {
    std::vector<int> cols;
    for (int k = 0; k < A.cols(); ++k) cols.push_back(A(0, k) + 2 * A(1, k));
    std::sort(cols.begin(), cols.end());
    return cols;
}

}  // namespace

TEST_CASE("m=2 enumeration matches sampled frequencies", "[ibp][slow]") {
    const double lambda = 1.0;
    // enumerate ordered matrices with K <= 2; p(A) is the ordered-matrix law
    std::map<std::vector<int>, double> expected;  // canonical config -> probability
    expected[{}] = std::exp(log_prior(BinaryMatrix(2, 0), lambda));
    for (int c1 = 1; c1 <= 3; ++c1) {
        BinaryMatrix A(2, 1);
        A.set(0, 0, c1 & 1);
        A.set(1, 0, (c1 >> 1) & 1);
        expected[canonical_cols(A)] += std::exp(log_prior(A, lambda));
        for (int c2 = 1; c2 <= 3; ++c2) {
            BinaryMatrix A2(2, 2);
            A2.set(0, 0, c1 & 1);
            A2.set(1, 0, (c1 >> 1) & 1);
            A2.set(0, 1, c2 & 1);
            A2.set(1, 1, (c2 >> 1) & 1);
            expected[canonical_cols(A2)] += std::exp(log_prior(A2, lambda));
        }
    }
    double mass = 0.0;
    for (const auto& [key, p] : expected) mass += p;

    Rng rng(314);
    const int N = 400000;
    std::map<std::vector<int>, long> counts;
    long truncated = 0;
    for (int j = 0; j < N; ++j) {
        const auto sample = sample_prior(2, lambda, rng);
        if (sample.K() > 2) continue;
        ++counts[canonical_cols(sample.A)];
        ++truncated;
    }
    for (const auto& [key, p] : expected) {
        const double cond = p / mass;  // conditioned on K <= 2
        const double freq = static_cast<double>(counts[key]) / static_cast<double>(truncated);
        const double se = std::sqrt(cond * (1.0 - cond) / static_cast<double>(truncated));
        INFO("config size " << key.size());
        CHECK(std::fabs(freq - cond) < 3.5 * se + 1e-9);
    }
}
