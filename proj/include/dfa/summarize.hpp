#pragma once

// Posterior structure summaries: MAP feature count, greedy column-matched
// Hamming distance, the Dahl-style medoid point estimate of A with
// conditional estimates of B and theta, and the shard-count tradeoff table.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "dfa/core.hpp"

namespace dfa {

// mode of K over draws; ties toward the smaller K
inline int map_K(const std::vector<McmcDraw>& draws) {
    if (draws.empty()) throw std::domain_error("map_K: empty draw list");
    std::map<int, int> counts;
    for (const auto& d : draws) ++counts[d.allocation.K()];
    int best_k = counts.begin()->first, best_c = counts.begin()->second;
    for (const auto& [k, c] : counts)
        if (c > best_c) {
            best_k = k;
            best_c = c;
        }
    return best_k;
}

namespace detail {

// columns packed into 64-bit blocks for popcount distances
struct PackedColumns {
    int rows = 0;
    int words = 0;
    std::vector<std::uint64_t> bits;  // cols x words

    explicit PackedColumns(const BinaryMatrix& mat)
        : rows(mat.rows()), words((mat.rows() + 63) / 64),
          bits(static_cast<std::size_t>(mat.cols()) * words, 0) {
        for (int c = 0; c < mat.cols(); ++c)
            for (int r = 0; r < rows; ++r)
                if (mat(r, c))
                    bits[static_cast<std::size_t>(c) * words + r / 64] |= std::uint64_t{1} << (r % 64);
    }

    int distance(int c, const PackedColumns& other, int oc) const {
        int d = 0;
        for (int w = 0; w < words; ++w)
            d += std::popcount(bits[static_cast<std::size_t>(c) * words + w] ^
                               other.bits[static_cast<std::size_t>(oc) * words + w]);
        return d;
    }
};

struct MatchResult {
    int distance = 0;
    std::vector<int> to;  // column of the second matrix matched to each column of the first
};

// Greedy pairing: repeatedly match the unmatched column pair with the
// smallest Hamming distance (ties toward lower indices) and sum distances.
inline MatchResult greedy_match(const PackedColumns& a, const PackedColumns& b, int K) {
    MatchResult res;
    res.to.assign(K, -1);
    std::vector<char> used_a(K, 0), used_b(K, 0);
    std::vector<std::vector<int>> dist(K, std::vector<int>(K));
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) dist[i][j] = a.distance(i, b, j);
    for (int round = 0; round < K; ++round) {
        int bi = -1, bj = -1, bd = 0;
        for (int i = 0; i < K; ++i) {
            if (used_a[i]) continue;
            for (int j = 0; j < K; ++j) {
                if (used_b[j]) continue;
                if (bi == -1 || dist[i][j] < bd) {
                    bi = i;
                    bj = j;
                    bd = dist[i][j];
                }
            }
        }
        used_a[bi] = used_b[bj] = 1;
        res.to[bi] = bj;
        res.distance += bd;
    }
    return res;
}

}  // namespace detail

// minimum Hamming distance between equal-shaped binary matrices under greedy
// column matching
inline int min_hamming_distance(const BinaryMatrix& a, const BinaryMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::domain_error("min_hamming_distance: dimension mismatch");
    if (a.cols() == 0) return 0;
    detail::PackedColumns pa(a), pb(b);
    return detail::greedy_match(pa, pb, a.cols()).distance;
}

// Dahl-style point estimate: among draws with K = map_K, the draw whose mean
// greedy-matched Hamming distance to the others is smallest; ties toward the
// earliest iteration.
inline McmcDraw dahl_estimate_A(const std::vector<McmcDraw>& draws) {
    if (draws.empty()) throw std::domain_error("dahl_estimate_A: empty draw list");
    const int k_hat = map_K(draws);
    std::vector<int> keep;
    for (std::size_t d = 0; d < draws.size(); ++d)
        if (draws[d].allocation.K() == k_hat) keep.push_back(static_cast<int>(d));
    std::vector<detail::PackedColumns> packed;
    packed.reserve(keep.size());
    for (int d : keep) packed.emplace_back(draws[d].allocation.A);
    const int T = static_cast<int>(keep.size());
    if (T == 1) return draws[keep[0]];
    long best_total = -1;
    int best = 0;
    for (int i = 0; i < T; ++i) {
        long total = 0;
        for (int j = 0; j < T; ++j) {
            if (i == j) continue;
            total += k_hat == 0 ? 0 : detail::greedy_match(packed[i], packed[j], k_hat).distance;
        }
        if (best_total < 0 || total < best_total ||
            (total == best_total && draws[keep[i]].iteration < draws[keep[best]].iteration)) {
            best_total = total;
            best = i;
        }
    }
    return draws[keep[best]];
}

struct ConditionalEstimates {
    BinaryMatrix B_hat;
    std::vector<double> theta_hat;
};

// Conditional on A_hat: align the columns of each K-hat draw to A_hat by the
// greedy matching, then majority-vote B and average theta per column.
inline ConditionalEstimates conditional_estimates(const std::vector<McmcDraw>& draws,
                                                  const McmcDraw& a_hat) {
    const int K = a_hat.allocation.K();
    const int n = a_hat.allocation.items();
    std::vector<long> votes(static_cast<std::size_t>(n) * K, 0);
    std::vector<double> theta_sum(K, 0.0);
    long used = 0;
    detail::PackedColumns packed_hat(a_hat.allocation.A);
    for (const auto& d : draws) {
        if (d.allocation.K() != K) continue;
        detail::PackedColumns pd(d.allocation.A);
        // match the estimate's columns onto this draw's columns
        const auto match = K == 0 ? detail::MatchResult{} : detail::greedy_match(packed_hat, pd, K);
        for (int k = 0; k < K; ++k) {
            const int src = K == 0 ? k : match.to[k];
            theta_sum[k] += d.params.theta[src];
            for (int i = 0; i < n; ++i) votes[static_cast<std::size_t>(i) * K + k] += d.allocation.B(i, src);
        }
        ++used;
    }
    if (used == 0) throw std::domain_error("conditional_estimates: no draws with matching K");
    ConditionalEstimates out;
    out.B_hat = BinaryMatrix(n, K);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < K; ++k)
            out.B_hat.set(i, k, 2 * votes[static_cast<std::size_t>(i) * K + k] > used ? 1 : 0);
    out.theta_hat.resize(K);
    for (int k = 0; k < K; ++k) out.theta_hat[k] = theta_sum[k] / static_cast<double>(used);
    return out;
}

struct TradeoffRow {
    double S = 1.0;
    double per_shard_cost = 0.0;  // (m/S)^3, relative units
    double total_cost = 0.0;      // S * (m/S)^3
    double se_theta = 0.0;        // ((m_s n)/log(m_s n))^(-1/2), relative units
};

// Complexity-per-iteration and theta-standard-error tradeoff across shard
// counts; natural log, proportionality constants fixed to 1.
inline std::vector<TradeoffRow> tradeoff_table(double m, double n, const std::vector<double>& S_values) {
    if (m < 2.0 || n < 2.0) throw std::domain_error("tradeoff_table: need m, n >= 2");
    std::vector<TradeoffRow> rows;
    for (double S : S_values) {
        if (!(S >= 1.0)) throw std::domain_error("tradeoff_table: shard count must be >= 1");
        const double ms = m / S;
        const double cells = ms * n;
        if (!(cells > 1.0)) throw std::domain_error("tradeoff_table: m_s * n must exceed 1");
        TradeoffRow row;
        row.S = S;
        row.per_shard_cost = ms * ms * ms;
        row.total_cost = S * row.per_shard_cost;
        row.se_theta = std::sqrt(std::log(cells) / cells);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace dfa
