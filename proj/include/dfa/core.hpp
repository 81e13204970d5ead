#pragma once

// Domain types shared by every module: the sparse ordinal rating matrix, the
// paired binary feature allocation (A for users, B for items), model
// parameters, latent probit scores, and stored posterior draws. Plus the
// ordinal-probit link and likelihood primitives.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dfa/stats.hpp"

namespace dfa {

struct RatingEntry {
    int user = 0;
    int item = 0;
    int rating = 0;  // 1..5
};

// Sparse ordinal ratings, indexed both by user row and item column. Entries
// are immutable once built; row/col indexes hold positions into entries() so
// per-entry side arrays (latent scores, cached means) align by entry id.
class RatingMatrix {
  public:
    RatingMatrix(int m, int n, std::vector<RatingEntry> entries)
        : m_(m), n_(n), entries_(std::move(entries)) {
        if (m_ < 0 || n_ < 0) throw std::invalid_argument("RatingMatrix: negative dimensions");
        row_ids_.assign(m_, {});
        col_ids_.assign(n_, {});
        std::set<std::pair<int, int>> seen;
        for (std::size_t e = 0; e < entries_.size(); ++e) {
            const auto& [u, i, r] = entries_[e];
            if (u < 0 || u >= m_ || i < 0 || i >= n_)
                throw std::invalid_argument("RatingMatrix: entry index out of range");
            if (r < 1 || r > 5)
                throw std::invalid_argument("RatingMatrix: rating outside {1..5}");
            if (!seen.emplace(u, i).second)
                throw std::invalid_argument("RatingMatrix: duplicate entry for user " +
                                            std::to_string(u + 1) + ", item " + std::to_string(i + 1));
            row_ids_[u].push_back(static_cast<int>(e));
            col_ids_[i].push_back(static_cast<int>(e));
        }
    }

    int users() const { return m_; }
    int items() const { return n_; }
    const std::vector<RatingEntry>& entries() const { return entries_; }
    std::size_t observed() const { return entries_.size(); }
    const std::vector<int>& row(int u) const { return row_ids_.at(u); }
    const std::vector<int>& col(int i) const { return col_ids_.at(i); }

  private:
    int m_, n_;
    std::vector<RatingEntry> entries_;
    std::vector<std::vector<int>> row_ids_;
    std::vector<std::vector<int>> col_ids_;
};

// Restriction of a rating matrix to a subset of users (rows renumbered to
// 0..|users|-1 in the given order, all items kept).
inline RatingMatrix restrict_users(const RatingMatrix& ratings, const std::vector<int>& users) {
    std::vector<int> local(ratings.users(), -1);
    for (std::size_t s = 0; s < users.size(); ++s) {
        const int u = users[s];
        if (u < 0 || u >= ratings.users()) throw std::out_of_range("restrict_users: bad user id");
        if (local[u] != -1) throw std::invalid_argument("restrict_users: duplicate user id");
        local[u] = static_cast<int>(s);
    }
    std::vector<RatingEntry> sub;
    for (const auto& e : ratings.entries())
        if (local[e.user] != -1) sub.push_back({local[e.user], e.item, e.rating});
    return RatingMatrix(static_cast<int>(users.size()), ratings.items(), std::move(sub));
}

// Row-major binary matrix with a mutable column count.
class BinaryMatrix {
  public:
    BinaryMatrix() = default;
    BinaryMatrix(int rows, int cols, std::uint8_t fill = 0)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::uint8_t operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    void set(int r, int c, std::uint8_t v) { data_[static_cast<std::size_t>(r) * cols_ + c] = v; }

    int col_sum(int c) const {
        int s = 0;
        for (int r = 0; r < rows_; ++r) s += (*this)(r, c);
        return s;
    }

    void append_column(const std::vector<std::uint8_t>& col) {
        if (static_cast<int>(col.size()) != rows_) throw std::invalid_argument("append_column: size mismatch");
        std::vector<std::uint8_t> next(static_cast<std::size_t>(rows_) * (cols_ + 1));
        for (int r = 0; r < rows_; ++r) {
            std::copy_n(data_.begin() + static_cast<std::size_t>(r) * cols_, cols_,
                        next.begin() + static_cast<std::size_t>(r) * (cols_ + 1));
            next[static_cast<std::size_t>(r) * (cols_ + 1) + cols_] = col[r];
        }
        data_ = std::move(next);
        ++cols_;
    }

    // drop the given columns (indices need not be sorted)
    void remove_columns(std::vector<int> ks) {
        if (ks.empty()) return;
        std::sort(ks.begin(), ks.end());
        std::vector<char> drop(cols_, 0);
        for (int k : ks) {
            if (k < 0 || k >= cols_) throw std::out_of_range("remove_columns: bad index");
            drop[k] = 1;
        }
        const int kept = cols_ - static_cast<int>(ks.size());
        std::vector<std::uint8_t> next(static_cast<std::size_t>(rows_) * kept);
        for (int r = 0; r < rows_; ++r) {
            int c2 = 0;
            for (int c = 0; c < cols_; ++c)
                if (!drop[c]) next[static_cast<std::size_t>(r) * kept + c2++] = (*this)(r, c);
        }
        data_ = std::move(next);
        cols_ = kept;
    }

    bool operator==(const BinaryMatrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

  private:
    int rows_ = 0, cols_ = 0;
    std::vector<std::uint8_t> data_;
};

// Paired user/item allocation: A is m x K, B is n x K, same K.
struct FeatureAllocation {
    BinaryMatrix A;
    BinaryMatrix B;

    FeatureAllocation() = default;
    FeatureAllocation(BinaryMatrix a, BinaryMatrix b) : A(std::move(a)), B(std::move(b)) {
        if (A.cols() != B.cols()) throw std::invalid_argument("FeatureAllocation: K mismatch");
    }

    int users() const { return A.rows(); }
    int items() const { return B.rows(); }
    int K() const { return A.cols(); }
};

struct ModelParams {
    double b0 = 2.5;
    std::vector<double> theta;  // one effect per feature
    std::vector<double> rho;    // one offset per item
    double tau = 0.25;          // probit SD, > 0
};

struct InverseGammaPrior {
    double shape = 5.0;
    double scale = 1.0;
};

struct NormalPrior {
    double mean = 0.0;
    double sd = kInf;  // sd = inf means flat
    bool flat() const { return !std::isfinite(sd); }
};

struct BetaPrior {
    double a = 1.0;
    double b = 9.0;
};

struct Hyperparams {
    double lambda = 3.0;        // IBP concentration
    double p_b = 0.1;           // Bernoulli inclusion probability for B
    bool p_b_fixed = false;     // when true, p_b is never resampled
    BetaPrior p_b_prior{};      // Beta hyperprior on p_b when not fixed
    double sigma0_theta = 2.0;  // prior SD of theta
    InverseGammaPrior tau_prior{};  // on tau^2
    NormalPrior rho_prior{};        // flat by default
};

// One latent probit score per observed entry, aligned with
// RatingMatrix::entries().
struct LatentScores {
    std::vector<double> z;
};

struct McmcDraw {
    FeatureAllocation allocation;
    ModelParams params;
    long iteration = 0;
    double p_b = 0.1;
};

// rating bracket (lo, hi] on the probit scale
inline std::pair<double, double> rating_bracket(int r) {
    switch (r) {
        case 1: return {-kInf, 1.0};
        case 2: return {1.0, 2.0};
        case 3: return {2.0, 3.0};
        case 4: return {3.0, 4.0};
        case 5: return {4.0, kInf};
        default: throw std::domain_error("rating_bracket: rating outside {1..5}");
    }
}

// b0 + sum of theta over features shared by (u, i) + rho_i
inline double probit_mean(int u, int i, const FeatureAllocation& alloc, const ModelParams& params) {
    if (u < 0 || u >= alloc.users() || i < 0 || i >= alloc.items())
        throw std::out_of_range("probit_mean: index out of range");
    if (static_cast<int>(params.theta.size()) != alloc.K() ||
        static_cast<int>(params.rho.size()) != alloc.items())
        throw std::invalid_argument("probit_mean: parameter dimensions inconsistent");
    double mean = params.b0 + params.rho[i];
    for (int k = 0; k < alloc.K(); ++k)
        if (alloc.A(u, k) && alloc.B(i, k)) mean += params.theta[k];
    return mean;
}

inline int rating_from_score(double z) {
    if (!std::isfinite(z)) throw std::domain_error("rating_from_score: non-finite score");
    if (z <= 1.0) return 1;
    if (z <= 2.0) return 2;
    if (z <= 3.0) return 3;
    if (z <= 4.0) return 4;
    return 5;
}

// P(r = x) = Phi((hi-mean)/tau) - Phi((lo-mean)/tau). Adjacent categories share
// boundary CDF values, so the five probabilities telescope to 1.
inline double category_prob(double mean, double tau, int x) {
    if (!(tau > 0.0)) throw std::domain_error("category_prob: tau must be positive");
    const auto [lo, hi] = rating_bracket(x);
    const double fb = (hi == kInf) ? 1.0 : norm_cdf((hi - mean) / tau);
    const double fa = (lo == -kInf) ? 0.0 : norm_cdf((lo - mean) / tau);
    return fb - fa;
}

// log P(r = x), stabilized: when the bracket sits deep in a tail the CDF
// difference is formed in log space instead.
inline double log_category_prob(double mean, double tau, int x) {
    if (!(tau > 0.0)) throw std::domain_error("log_category_prob: tau must be positive");
    const auto [lo, hi] = rating_bracket(x);
    const double a = (lo == -kInf) ? -kInf : (lo - mean) / tau;
    const double b = (hi == kInf) ? kInf : (hi - mean) / tau;
    if (a == -kInf) return log_norm_cdf(b);
    if (b == kInf) return log_norm_cdf(-a);
    if (b <= 0.0) {
        const double lfb = log_norm_cdf(b);
        const double lfa = log_norm_cdf(a);
        return lfb + std::log1p(-std::exp(lfa - lfb));
    }
    if (a >= 0.0) {
        const double lsa = log_norm_cdf(-a);
        const double lsb = log_norm_cdf(-b);
        return lsa + std::log1p(-std::exp(lsb - lsa));
    }
    // bracket straddles the mean; the difference is well conditioned
    return std::log(norm_cdf(b) - norm_cdf(a));
}

// sum over user u's observed ratings of log category probabilities; 0 when
// the user rated nothing.
inline double log_lik_row(int u, const RatingMatrix& ratings, const FeatureAllocation& alloc,
                          const ModelParams& params) {
    if (u < 0 || u >= ratings.users()) throw std::out_of_range("log_lik_row: bad user");
    double ll = 0.0;
    for (int e : ratings.row(u)) {
        const auto& entry = ratings.entries()[e];
        ll += log_category_prob(probit_mean(u, entry.item, alloc, params), params.tau, entry.rating);
    }
    return ll;
}

}  // namespace dfa
