#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "dfa/core.hpp"
#include "dfa/rng.hpp"

using namespace dfa;

namespace {

FeatureAllocation make_alloc(int m, int n, const std::vector<std::vector<int>>& a_rows,
                             const std::vector<std::vector<int>>& b_rows) {
    const int K = a_rows.empty() ? 0 : static_cast<int>(a_rows[0].size());
    BinaryMatrix A(m, K), B(n, K);
    for (int u = 0; u < m; ++u)
        for (int k = 0; k < K; ++k) A.set(u, k, static_cast<std::uint8_t>(a_rows[u][k]));
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < K; ++k) B.set(i, k, static_cast<std::uint8_t>(b_rows[i][k]));
    return {std::move(A), std::move(B)};
}

}  // namespace

TEST_CASE("rating matrix validates entries", "[core]") {
    CHECK_THROWS(RatingMatrix(2, 2, {{0, 0, 3}, {0, 0, 4}}));  // duplicate
    CHECK_THROWS(RatingMatrix(2, 2, {{0, 0, 6}}));             // rating range
    CHECK_THROWS(RatingMatrix(2, 2, {{2, 0, 3}}));             // index range
    RatingMatrix r(2, 3, {{0, 1, 4}, {1, 2, 2}, {0, 0, 5}});
    CHECK(r.row(0).size() == 2);
    CHECK(r.col(2).size() == 1);
    // row and column indexes cover the same entry set
    std::vector<int> via_rows, via_cols;
    for (int u = 0; u < r.users(); ++u)
        for (int e : r.row(u)) via_rows.push_back(e);
    for (int i = 0; i < r.items(); ++i)
        for (int e : r.col(i)) via_cols.push_back(e);
    std::sort(via_rows.begin(), via_rows.end());
    std::sort(via_cols.begin(), via_cols.end());
    CHECK(via_rows == via_cols);
    CHECK(via_rows.size() == r.observed());
}

TEST_CASE("probit mean adds shared feature effects", "[core]") {
    ModelParams params;
    params.b0 = 2.5;
    params.tau = 0.25;

    // no features, zero offset: baseline only
    auto empty = make_alloc(1, 1, {{}}, {{}});
    params.theta = {};
    params.rho = {0.0};
    CHECK(probit_mean(0, 0, empty, params) == Catch::Approx(2.5));

    // theta = (1.0, -0.5), A_u = (1,1), B_i = (1,0), rho = 0.2
    auto alloc = make_alloc(1, 1, {{1, 1}}, {{1, 0}});
    params.theta = {1.0, -0.5};
    params.rho = {0.2};
    CHECK(probit_mean(0, 0, alloc, params) == Catch::Approx(3.7).epsilon(1e-14));

    // an extra feature the item is not in leaves the value unchanged
    auto wider = make_alloc(1, 1, {{1, 1, 1}}, {{1, 0, 0}});
    params.theta = {1.0, -0.5, 9.0};
    CHECK(probit_mean(0, 0, wider, params) == Catch::Approx(3.7).epsilon(1e-14));

    CHECK_THROWS(probit_mean(1, 0, alloc, params));
}

TEST_CASE("score-to-rating thresholds are half open", "[core]") {
    CHECK(rating_from_score(1.0) == 1);
    CHECK(rating_from_score(2.5) == 3);
    CHECK(rating_from_score(4.01) == 5);
    CHECK(rating_from_score(2.0) == 2);
    CHECK(rating_from_score(-100.0) == 1);
    CHECK_THROWS(rating_from_score(std::numeric_limits<double>::quiet_NaN()));
    CHECK_THROWS(rating_from_score(kInf));
}

TEST_CASE("link and likelihood use the same brackets", "[core]") {
    Rng rng(11);
    for (int j = 0; j < 2000; ++j) {
        const double z = rng.uniform(-3.0, 8.0);
        const int r = rating_from_score(z);
        const auto [lo, hi] = rating_bracket(r);
        CHECK(z > lo);
        CHECK(z <= hi);
    }
}

TEST_CASE("category probabilities match normal CDF values", "[core]") {
    CHECK(category_prob(2.5, 0.25, 3) == Catch::Approx(0.9544997361036416).epsilon(1e-12));
    CHECK(category_prob(2.5, 0.25, 1) == Catch::Approx(9.865876450376946e-10).epsilon(1e-9));
}

TEST_CASE("category probabilities sum to one across scales", "[core]") {
    Rng rng(12);
    for (double tau : {1e-6, 1e-3, 0.25, 1.0, 31.0, 1e6}) {
        for (int j = 0; j < 50; ++j) {
            const double mean = rng.uniform(-8.0, 12.0);
            double sum = 0.0;
            for (int x = 1; x <= 5; ++x) sum += category_prob(mean, tau, x);
            CHECK(sum == Catch::Approx(1.0).margin(1e-12));
        }
    }
}

TEST_CASE("log category probability is stable in deep tails", "[core]") {
    // moderate case agrees with the direct log
    for (int x = 1; x <= 5; ++x)
        CHECK(log_category_prob(2.7, 0.4, x) ==
              Catch::Approx(std::log(category_prob(2.7, 0.4, x))).epsilon(1e-11));
    // deep tail: category 1 when the mean sits at 30 with tau 0.25
    const double lp = log_category_prob(30.0, 0.25, 1);
    CHECK(std::isfinite(lp));
    CHECK(lp == Catch::Approx(log_norm_cdf((1.0 - 30.0) / 0.25)).epsilon(1e-12));
    // and the dominant category keeps essentially all mass
    CHECK(log_category_prob(30.0, 0.25, 5) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("row log likelihood sums observed entries", "[core]") {
    auto alloc = make_alloc(2, 2, {{}, {}}, {{}, {}});
    ModelParams params;
    params.b0 = 2.5;
    params.tau = 0.25;
    params.theta = {};
    params.rho = {0.0, 0.0};

    RatingMatrix none(2, 2, {{1, 0, 3}});
    CHECK(log_lik_row(0, none, alloc, params) == 0.0);  // user 0 rated nothing

    RatingMatrix one(2, 2, {{0, 0, 3}});
    CHECK(log_lik_row(0, one, alloc, params) ==
          Catch::Approx(std::log(0.9544997361036416)).epsilon(1e-12));

    RatingMatrix two(2, 2, {{0, 0, 3}, {0, 1, 3}});
    CHECK(log_lik_row(0, two, alloc, params) ==
          Catch::Approx(2.0 * std::log(0.9544997361036416)).epsilon(1e-12));
}

TEST_CASE("row log likelihood is invariant to joint column permutation", "[core]") {
    Rng rng(13);
    const int m = 6, n = 5, K = 4;
    BinaryMatrix A(m, K), B(n, K);
    for (int u = 0; u < m; ++u)
        for (int k = 0; k < K; ++k) A.set(u, k, rng.bernoulli(0.5));
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < K; ++k) B.set(i, k, rng.bernoulli(0.4));
    ModelParams params;
    params.theta = {0.7, -1.1, 0.3, 2.0};
    params.rho = {0.1, -0.2, 0.0, 0.4, -0.6};
    params.tau = 0.5;
    std::vector<RatingEntry> entries;
    for (int u = 0; u < m; ++u)
        for (int i = 0; i < n; ++i)
            if (rng.bernoulli(0.6)) entries.push_back({u, i, 1 + static_cast<int>(rng.uniform_int(5))});
    RatingMatrix ratings(m, n, entries);
    FeatureAllocation alloc(A, B);

    const std::vector<int> perm{2, 0, 3, 1};
    BinaryMatrix A2(m, K), B2(n, K);
    ModelParams params2 = params;
    for (int k = 0; k < K; ++k) {
        for (int u = 0; u < m; ++u) A2.set(u, k, A(u, perm[k]));
        for (int i = 0; i < n; ++i) B2.set(i, k, B(i, perm[k]));
        params2.theta[k] = params.theta[perm[k]];
    }
    FeatureAllocation alloc2(A2, B2);
    for (int u = 0; u < m; ++u)
        CHECK(log_lik_row(u, ratings, alloc, params) ==
              Catch::Approx(log_lik_row(u, ratings, alloc2, params2)).epsilon(1e-12));
}

TEST_CASE("restrict_users renumbers rows and keeps items", "[core]") {
    RatingMatrix r(4, 3, {{0, 0, 5}, {1, 1, 3}, {2, 2, 1}, {3, 0, 2}});
    auto sub = restrict_users(r, {1, 3});
    CHECK(sub.users() == 2);
    CHECK(sub.items() == 3);
    REQUIRE(sub.observed() == 2);
    CHECK(sub.entries()[0].user == 0);
    CHECK(sub.entries()[0].item == 1);
    CHECK(sub.entries()[1].user == 1);
    CHECK(sub.entries()[1].item == 0);
}
