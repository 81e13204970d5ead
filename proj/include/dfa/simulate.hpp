#pragma once

// Synthetic data generation from the model, with the ground truth retained
// for recovery checks, plus train/test holdout splitting.

#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "dfa/core.hpp"
#include "dfa/ibp.hpp"
#include "dfa/rng.hpp"

namespace dfa {

struct SimTruth {
    FeatureAllocation alloc;
    ModelParams params;  // theta, tau, b0 and (when included) rho
    bool has_rho = false;
    std::vector<double> scores;  // dense m x n latent scores, row-major
    std::vector<int> dense_ratings;  // dense m x n ratings, row-major
};

// A ~ IBP(lambda), B ~ Bernoulli(pB), theta ~ N(0, theta_sd^2), optional
// rho ~ N(0, 1); every (u, i) cell gets a latent score and a rating.
inline std::pair<SimTruth, RatingMatrix> generate_dataset(int m, int n, double lambda, double p_b,
                                                          double theta_sd, double tau, double b0,
                                                          bool include_rho, Rng& rng) {
    if (m < 1 || n < 1) throw std::domain_error("generate_dataset: need m, n >= 1");
    if (!(tau > 0.0) || !(theta_sd >= 0.0) || !(p_b > 0.0 && p_b < 1.0))
        throw std::domain_error("generate_dataset: bad parameters");
    SimTruth truth;
    IbpSample prior = sample_prior(m, lambda, rng);
    const int K = prior.K();
    BinaryMatrix B(n, K);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < K; ++k) B.set(i, k, rng.bernoulli(p_b) ? 1 : 0);
    truth.alloc = FeatureAllocation(std::move(prior.A), std::move(B));
    truth.params.b0 = b0;
    truth.params.tau = tau;
    truth.params.theta.resize(K);
    for (double& t : truth.params.theta) t = rng.normal(0.0, theta_sd);
    truth.params.rho.assign(n, 0.0);
    truth.has_rho = include_rho;
    if (include_rho)
        for (double& r : truth.params.rho) r = rng.normal(0.0, 1.0);

    truth.scores.resize(static_cast<std::size_t>(m) * n);
    truth.dense_ratings.resize(static_cast<std::size_t>(m) * n);
    std::vector<RatingEntry> entries;
    entries.reserve(truth.scores.size());
    for (int u = 0; u < m; ++u) {
        for (int i = 0; i < n; ++i) {
            const double mean = probit_mean(u, i, truth.alloc, truth.params);
            const double z = rng.normal(mean, tau);
            const int r = rating_from_score(z);
            truth.scores[static_cast<std::size_t>(u) * n + i] = z;
            truth.dense_ratings[static_cast<std::size_t>(u) * n + i] = r;
            entries.push_back({u, i, r});
        }
    }
    return {std::move(truth), RatingMatrix(m, n, std::move(entries))};
}

struct GlobalFraction {
    double f = 0.2;  // test fraction
};
struct PerUserOneTest {};
using HoldoutMode = std::variant<GlobalFraction, PerUserOneTest>;

// Disjoint train/test split whose union is the input. Global mode holds out
// floor(f * N) entries; per-user mode holds out exactly one rated item per
// user and requires every user to have at least two ratings.
inline std::pair<RatingMatrix, RatingMatrix> holdout_split(const RatingMatrix& ratings,
                                                           const HoldoutMode& mode, Rng& rng) {
    const int N = static_cast<int>(ratings.observed());
    std::vector<char> is_test(N, 0);
    if (std::holds_alternative<GlobalFraction>(mode)) {
        const double f = std::get<GlobalFraction>(mode).f;
        if (!(f > 0.0 && f < 1.0)) throw std::domain_error("holdout_split: fraction outside (0,1)");
        const int test_n = static_cast<int>(static_cast<double>(N) * f);
        std::vector<int> order(N);
        for (int e = 0; e < N; ++e) order[e] = e;
        for (int e = N - 1; e > 0; --e)
            std::swap(order[e], order[static_cast<int>(rng.uniform_int(e + 1))]);
        for (int j = 0; j < test_n; ++j) is_test[order[j]] = 1;
    } else {
        for (int u = 0; u < ratings.users(); ++u) {
            const auto& row = ratings.row(u);
            if (row.size() < 2)
                throw std::domain_error("holdout_split: user " + std::to_string(u + 1) +
                                        " has fewer than 2 ratings");
            is_test[row[rng.uniform_int(row.size())]] = 1;
        }
    }
    std::vector<RatingEntry> train, test;
    for (int e = 0; e < N; ++e)
        (is_test[e] ? test : train).push_back(ratings.entries()[e]);
    return {RatingMatrix(ratings.users(), ratings.items(), std::move(train)),
            RatingMatrix(ratings.users(), ratings.items(), std::move(test))};
}

}  // namespace dfa
