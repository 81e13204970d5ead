#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dfa/mf.hpp"
#include "dfa/rng.hpp"
#include "dfa/simulate.hpp"

using namespace dfa;

namespace {

RatingMatrix random_ratings(int m, int n, double density, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<RatingEntry> entries;
    for (int u = 0; u < m; ++u)
        for (int i = 0; i < n; ++i)
            if (rng.bernoulli(density)) entries.push_back({u, i, 1 + static_cast<int>(rng.uniform_int(5))});
    return RatingMatrix(m, n, std::move(entries));
}

}  // namespace

TEST_CASE("predict_mf is the factor inner product", "[mf]") {
    MfModel model;
    model.k = 2;
    model.m = 1;
    model.n = 1;
    model.P = {0.0, 0.0};
    model.Q = {0.0, 0.0};
    CHECK(predict_mf(model, 0, 0) == 0.0);
    model.P = {1.0, 2.0};
    model.Q = {3.0, -1.0};
    CHECK(predict_mf(model, 0, 0) == Catch::Approx(1.0));
    for (double& v : model.P) v *= 2.0;
    CHECK(predict_mf(model, 0, 0) == Catch::Approx(2.0));
}

TEST_CASE("mf_rating rounds half up and clips", "[mf]") {
    MfModel model;
    model.k = 1;
    model.m = 1;
    model.n = 4;
    model.P = {1.0};
    model.Q = {3.4, 6.2, 0.1, 3.5};
    CHECK(mf_rating(model, 0, 0) == 3);
    CHECK(mf_rating(model, 0, 1) == 5);
    CHECK(mf_rating(model, 0, 2) == 1);
    CHECK(mf_rating(model, 0, 3) == 4);
}

TEST_CASE("analytic gradient matches central differences", "[mf]") {
    const auto ratings = random_ratings(6, 5, 0.7, 31);
    Rng rng(32);
    MfModel model = train_mf(ratings, 3, 0.07, 0.04, 0.01, 2, rng);
    const auto grad = mf_gradient(model, ratings);
    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t j = 0; j < grad.size(); j += 3) {
        MfModel plus = model, minus = model;
        auto& pv = j < model.P.size() ? plus.P[j] : plus.Q[j - model.P.size()];
        auto& mv = j < model.P.size() ? minus.P[j] : minus.Q[j - model.P.size()];
        pv += h;
        mv -= h;
        const double fd = (mf_objective(plus, ratings) - mf_objective(minus, ratings)) / (2.0 * h);
        const double rel = std::fabs(fd - grad[j]) / std::max(1.0, std::fabs(grad[j]));
        worst = std::max(worst, rel);
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("one unregularized SGD step reduces the entry error", "[mf]") {
    Rng rng(33);
    for (int trial = 0; trial < 30; ++trial) {
        RatingMatrix single(1, 1, {{0, 0, 1 + static_cast<int>(rng.uniform_int(5))}});
        Rng init(100 + trial);
        MfModel before = train_mf(single, 2, 0.0, 0.0, 1e-9, 1, init);  // effectively just the init
        const double e0 = single.entries()[0].rating - predict_mf(before, 0, 0);
        Rng init2(100 + trial);
        MfModel after = train_mf(single, 2, 0.0, 0.0, 1e-3, 1, init2);
        const double e1 = single.entries()[0].rating - predict_mf(after, 0, 0);
        CHECK(std::fabs(e1) < std::fabs(e0));
    }
}

TEST_CASE("a complete low-rank matrix is fit to near zero error", "[mf]") {
    // rank-2 3x3 with all entries in 1..5
    RatingMatrix ratings(3, 3,
                         {{0, 0, 1}, {0, 1, 1}, {0, 2, 2}, {1, 0, 1}, {1, 1, 2}, {1, 2, 3},
                          {2, 0, 2}, {2, 1, 3}, {2, 2, 5}});
    Rng rng(34);
    MfModel model = train_mf(ratings, 3, 0.0, 0.0, 0.05, 800, rng);
    CHECK(rmse_mf(model, ratings) < 0.02);
}

TEST_CASE("objective is non-increasing across 5-epoch windows", "[mf]") {
    const auto ratings = random_ratings(15, 12, 0.6, 35);
    std::vector<double> trace;
    for (int epochs = 1; epochs <= 30; ++epochs) {
        Rng rng(36);
        trace.push_back(mf_objective(train_mf(ratings, 3, 0.02, 0.02, 0.02, epochs, rng), ratings));
    }
    std::vector<double> windows;
    for (int w = 0; w < 6; ++w) {
        double sum = 0.0;
        for (int j = 0; j < 5; ++j) sum += trace[w * 5 + j];
        windows.push_back(sum / 5.0);
    }
    for (std::size_t w = 1; w < windows.size(); ++w) CHECK(windows[w] <= windows[w - 1] + 1e-9);
}

TEST_CASE("training reports divergence with the epoch", "[mf]") {
    const auto ratings = random_ratings(10, 8, 0.7, 37);
    Rng rng(38);
    CHECK_THROWS_WITH(train_mf(ratings, 3, 0.0, 0.0, 15.0, 50, rng),
                      Catch::Matchers::ContainsSubstring("epoch"));
}

TEST_CASE("cross validation picks the single grid point and is deterministic", "[mf]") {
    const auto ratings = random_ratings(12, 10, 0.7, 39);
    const auto [k, lp, lq] = cv_select_rank(ratings, {4}, {0.03}, 3, 0.02, 15, 40);
    CHECK(k == 4);
    CHECK(lp == Catch::Approx(0.03));
    CHECK(lq == Catch::Approx(0.03));
    const auto again = cv_select_rank(ratings, {2, 4}, {0.01, 0.03}, 3, 0.02, 15, 41);
    const auto again2 = cv_select_rank(ratings, {2, 4}, {0.01, 0.03}, 3, 0.02, 15, 41);
    CHECK(std::get<0>(again) == std::get<0>(again2));
    CHECK(std::get<1>(again) == std::get<1>(again2));
}

TEST_CASE("cross validation recovers a planted rank-2 structure", "[mf][slow]") {
    Rng rng(42);
    const int m = 24, n = 18;
    std::vector<RatingEntry> entries;
    for (int u = 0; u < m; ++u) {
        const double x = rng.uniform(-1.4, 1.4);
        for (int i = 0; i < n; ++i) {
            const double a = 1.8 + 0.16 * i;  // item intercepts spread over (1.8, 4.7)
            const double b = rng.uniform(-1.0, 1.0);
            const double v = a + x * b;
            const int r = static_cast<int>(std::clamp(std::floor(v + 0.5), 1.0, 5.0));
            entries.push_back({u, i, r});
        }
    }
    RatingMatrix ratings(m, n, std::move(entries));
    const auto [k, lp, lq] = cv_select_rank(ratings, {1, 2, 3, 5}, {0.02}, 3, 0.02, 60, 43);
    CHECK((k == 2 || k == 3));
}
