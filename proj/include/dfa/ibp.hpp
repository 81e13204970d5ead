#pragma once

// Indian buffet process prior on the user-feature matrix A: generative
// sampling, the conditional inclusion probability used by the row Gibbs step,
// and the log prior density of an ordered matrix.

#include <numeric>
#include <stdexcept>
#include <vector>

#include "dfa/core.hpp"
#include "dfa/rng.hpp"
#include "dfa/stats.hpp"

namespace dfa {

struct IbpSample {
    BinaryMatrix A;
    int K() const { return A.cols(); }
};

// Row-by-row generative scheme: row u joins existing feature k with
// probability m_{u-1,k}/u, then opens Poisson(lambda/u) new features. New
// features are indexed by appearance; the final column order is randomly
// permuted.
inline IbpSample sample_prior(int m, double lambda, Rng& rng) {
    if (m < 1) throw std::domain_error("sample_prior: m must be >= 1");
    if (!(lambda > 0.0)) throw std::domain_error("sample_prior: lambda must be positive");
    std::vector<std::vector<std::uint8_t>> cols;  // column-major while building
    std::vector<int> counts;
    for (int u = 0; u < m; ++u) {
        for (std::size_t k = 0; k < cols.size(); ++k) {
            const bool join = rng.bernoulli(static_cast<double>(counts[k]) / (u + 1));
            cols[k].push_back(join ? 1 : 0);
            counts[k] += join ? 1 : 0;
        }
        const long fresh = rng.poisson(lambda / (u + 1));
        for (long j = 0; j < fresh; ++j) {
            std::vector<std::uint8_t> col(u, 0);
            col.push_back(1);
            cols.push_back(std::move(col));
            counts.push_back(1);
        }
    }
    const int K = static_cast<int>(cols.size());
    std::vector<int> order(K);
    std::iota(order.begin(), order.end(), 0);
    for (int k = K - 1; k > 0; --k)
        std::swap(order[k], order[static_cast<int>(rng.uniform_int(k + 1))]);
    BinaryMatrix A(m, K);
    for (int k = 0; k < K; ++k) {
        const auto& col = cols[order[k]];
        for (std::size_t u = 0; u < col.size(); ++u) A.set(static_cast<int>(u), k, col[u]);
    }
    return {std::move(A)};
}

// p(A_uk = 1 | rest) = m_{-u,k} / m
inline double conditional_inclusion_prob(int col_count_excl, int m) {
    if (m < 1) throw std::domain_error("conditional_inclusion_prob: m must be >= 1");
    if (col_count_excl < 0 || col_count_excl > m - 1)
        throw std::domain_error("conditional_inclusion_prob: count outside [0, m-1]");
    return static_cast<double>(col_count_excl) / m;
}

// log p(A) = K log(lambda) - lambda H_m - log K!
//          + sum_k [ lgamma(m_k) + lgamma(m - m_k + 1) - lgamma(m + 1) ]
inline double log_prior(const BinaryMatrix& A, double lambda) {
    if (!(lambda > 0.0)) throw std::domain_error("log_prior: lambda must be positive");
    const int m = A.rows();
    const int K = A.cols();
    const double H = harmonic_number(m);
    double lp = K * std::log(lambda) - lambda * H - log_gamma(K + 1.0);
    for (int k = 0; k < K; ++k) {
        const int mk = A.col_sum(k);
        if (mk == 0) throw std::invalid_argument("log_prior: all-zero column");
        lp += log_gamma(static_cast<double>(mk)) + log_gamma(static_cast<double>(m - mk + 1)) -
              log_gamma(static_cast<double>(m + 1));
    }
    return lp;
}

// E[K] = lambda * H_m
inline double expected_features(int m, double lambda) {
    if (m < 1) throw std::domain_error("expected_features: m must be >= 1");
    if (lambda < 0.0) throw std::domain_error("expected_features: lambda must be >= 0");
    return lambda * harmonic_number(m);
}

}  // namespace dfa
