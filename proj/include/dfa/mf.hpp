#pragma once

// Regularized matrix factorization baseline fit by per-entry SGD, used both
// for accuracy comparison and to initialize the feature count of the MCMC
// chain.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "dfa/core.hpp"
#include "dfa/rng.hpp"

namespace dfa {

struct MfHyper {
    double lambda_p = 0.05;
    double lambda_q = 0.05;
    double lr = 0.02;
    int epochs = 50;
};

struct MfModel {
    int k = 0;
    int m = 0;
    int n = 0;
    std::vector<double> P;  // k x m, row-major by factor
    std::vector<double> Q;  // k x n
    MfHyper hyper{};

    double p(int f, int u) const { return P[static_cast<std::size_t>(f) * m + u]; }
    double q(int f, int i) const { return Q[static_cast<std::size_t>(f) * n + i]; }
    double& p(int f, int u) { return P[static_cast<std::size_t>(f) * m + u]; }
    double& q(int f, int i) { return Q[static_cast<std::size_t>(f) * n + i]; }
};

inline double predict_mf(const MfModel& model, int u, int i) {
    if (u < 0 || u >= model.m || i < 0 || i >= model.n)
        throw std::out_of_range("predict_mf: index out of range");
    double dot = 0.0;
    for (int f = 0; f < model.k; ++f) dot += model.p(f, u) * model.q(f, i);
    return dot;
}

// nearest-integer rating clipped to [1,5]; .5 rounds up
inline int mf_rating(const MfModel& model, int u, int i) {
    const double r = std::floor(predict_mf(model, u, i) + 0.5);
    return static_cast<int>(std::clamp(r, 1.0, 5.0));
}

// E = 1/2 sum I_ui (r - p'q)^2 + lambda_P/2 sum ||p_u||^2 + lambda_Q/2 sum ||q_i||^2
inline double mf_objective(const MfModel& model, const RatingMatrix& ratings) {
    double sq = 0.0;
    for (const auto& e : ratings.entries()) {
        const double err = e.rating - predict_mf(model, e.user, e.item);
        sq += err * err;
    }
    double pen = 0.0;
    for (double v : model.P) pen += model.hyper.lambda_p * v * v;
    for (double v : model.Q) pen += model.hyper.lambda_q * v * v;
    return 0.5 * sq + 0.5 * pen;
}

// analytic gradient of mf_objective, laid out like (P, Q) concatenated
inline std::vector<double> mf_gradient(const MfModel& model, const RatingMatrix& ratings) {
    std::vector<double> grad(model.P.size() + model.Q.size(), 0.0);
    for (const auto& e : ratings.entries()) {
        const double err = e.rating - predict_mf(model, e.user, e.item);
        for (int f = 0; f < model.k; ++f) {
            grad[static_cast<std::size_t>(f) * model.m + e.user] -= err * model.q(f, e.item);
            grad[model.P.size() + static_cast<std::size_t>(f) * model.n + e.item] -= err * model.p(f, e.user);
        }
    }
    for (std::size_t j = 0; j < model.P.size(); ++j) grad[j] += model.hyper.lambda_p * model.P[j];
    for (std::size_t j = 0; j < model.Q.size(); ++j)
        grad[model.P.size() + j] += model.hyper.lambda_q * model.Q[j];
    return grad;
}

// Per-entry SGD with a seeded shuffle each epoch; factors start at N(0, 0.1^2).
inline MfModel train_mf(const RatingMatrix& ratings, int k, double lambda_p, double lambda_q,
                        double lr, int epochs, Rng& rng) {
    if (k < 1) throw std::domain_error("train_mf: rank must be >= 1");
    if (!(lr > 0.0)) throw std::domain_error("train_mf: learning rate must be positive");
    if (epochs < 1) throw std::domain_error("train_mf: epochs must be >= 1");
    MfModel model;
    model.k = k;
    model.m = ratings.users();
    model.n = ratings.items();
    model.hyper = {lambda_p, lambda_q, lr, epochs};
    model.P.resize(static_cast<std::size_t>(k) * model.m);
    model.Q.resize(static_cast<std::size_t>(k) * model.n);
    for (double& v : model.P) v = rng.normal(0.0, 0.1);
    for (double& v : model.Q) v = rng.normal(0.0, 0.1);

    std::vector<int> order(ratings.observed());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (std::size_t j = order.size(); j > 1; --j)
            std::swap(order[j - 1], order[static_cast<std::size_t>(rng.uniform_int(j))]);
        for (int id : order) {
            const auto& e = ratings.entries()[id];
            const double err = e.rating - predict_mf(model, e.user, e.item);
            for (int f = 0; f < model.k; ++f) {
                const double pu = model.p(f, e.user);
                const double qi = model.q(f, e.item);
                model.p(f, e.user) += lr * (err * qi - lambda_p * pu);
                model.q(f, e.item) += lr * (err * pu - lambda_q * qi);
            }
        }
        const double obj = mf_objective(model, ratings);
        if (!std::isfinite(obj))
            throw std::runtime_error("train_mf: objective diverged at epoch " + std::to_string(epoch + 1));
    }
    return model;
}

inline double rmse_mf(const MfModel& model, const RatingMatrix& ratings) {
    if (ratings.observed() == 0) throw std::domain_error("rmse_mf: no entries");
    double sq = 0.0;
    for (const auto& e : ratings.entries()) {
        const double err = e.rating - predict_mf(model, e.user, e.item);
        sq += err * err;
    }
    return std::sqrt(sq / static_cast<double>(ratings.observed()));
}

// Grid search over (k, lambda) minimizing mean held-out RMSE across seeded
// folds; ties resolve toward the smaller rank.
inline std::tuple<int, double, double> cv_select_rank(const RatingMatrix& ratings,
                                                      const std::vector<int>& k_grid,
                                                      const std::vector<double>& lambda_grid,
                                                      int folds, double lr, int epochs,
                                                      std::uint64_t seed) {
    if (folds < 2) throw std::domain_error("cv_select_rank: folds must be >= 2");
    if (k_grid.empty() || lambda_grid.empty()) throw std::domain_error("cv_select_rank: empty grid");
    const int N = static_cast<int>(ratings.observed());
    Rng fold_rng(derive_seed(seed, seed_tag("cv-folds")));
    std::vector<int> fold_of(N);
    for (int e = 0; e < N; ++e) fold_of[e] = static_cast<int>(fold_rng.uniform_int(folds));

    double best_rmse = kInf;
    int best_k = k_grid.front();
    double best_lambda = lambda_grid.front();
    for (int k : k_grid) {
        for (double lambda : lambda_grid) {
            double total = 0.0;
            for (int fold = 0; fold < folds; ++fold) {
                std::vector<RatingEntry> train, held;
                for (int e = 0; e < N; ++e)
                    (fold_of[e] == fold ? held : train).push_back(ratings.entries()[e]);
                if (train.empty() || held.empty()) continue;
                RatingMatrix train_m(ratings.users(), ratings.items(), std::move(train));
                Rng rng(derive_seed(seed, seed_tag("cv-train"), static_cast<std::uint64_t>(fold)));
                MfModel model = train_mf(train_m, k, lambda, lambda, lr, epochs, rng);
                double sq = 0.0;
                for (const auto& e : held) {
                    const double err = e.rating - predict_mf(model, e.user, e.item);
                    sq += err * err;
                }
                total += std::sqrt(sq / static_cast<double>(held.size()));
            }
            const double mean_rmse = total / folds;
            if (mean_rmse < best_rmse - 1e-12 ||
                (std::fabs(mean_rmse - best_rmse) <= 1e-12 && k < best_k)) {
                best_rmse = mean_rmse;
                best_k = k;
                best_lambda = lambda;
            }
        }
    }
    return {best_k, best_lambda, best_lambda};
}

}  // namespace dfa
