#pragma once

// Posterior predictive rating distribution, point prediction, and the
// evaluation metrics reported for rating and preference prediction.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfa/core.hpp"
#include "dfa/stats.hpp"

namespace dfa {

struct PredictiveEntry {
    int user = 0;
    int item = 0;
    std::array<double, 5> probs{};  // P(r = 1..5), averaged over the ensemble
    double score_mean = 0.0;        // posterior mean probit score
    double score_lo = 0.0;          // 2.5% quantile of per-draw probit means
    double score_hi = 0.0;          // 97.5% quantile
};

struct EvalRow {
    std::string metric;
    std::string shard;  // "all" or a shard id
    double value = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    long n = 0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
};

namespace detail {

// linear interpolation between order statistics (R type 7)
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw std::domain_error("quantile: empty sample");
    if (sorted.size() == 1) return sorted[0];
    const double h = q * (static_cast<double>(sorted.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

// Averages the per-draw category probabilities; also reports the ensemble
// mean and central 95% interval of the per-draw probit means.
inline PredictiveEntry posterior_category_probs(int u, int i, const std::vector<McmcDraw>& ensemble) {
    if (ensemble.empty()) throw std::domain_error("posterior_category_probs: empty ensemble");
    PredictiveEntry out;
    out.user = u;
    out.item = i;
    std::vector<double> means;
    means.reserve(ensemble.size());
    for (const auto& draw : ensemble) {
        const double mean = probit_mean(u, i, draw.allocation, draw.params);
        means.push_back(mean);
        for (int x = 1; x <= 5; ++x)
            out.probs[x - 1] += category_prob(mean, draw.params.tau, x);
    }
    const double T = static_cast<double>(ensemble.size());
    for (double& p : out.probs) p /= T;
    double sum = 0.0;
    for (double v : means) sum += v;
    out.score_mean = sum / T;
    std::sort(means.begin(), means.end());
    out.score_lo = detail::quantile_sorted(means, 0.025);
    out.score_hi = detail::quantile_sorted(means, 0.975);
    return out;
}

// argmax category; ties break toward the lower rating
inline int predict_rating(const PredictiveEntry& dist) {
    int best = 1;
    for (int x = 2; x <= 5; ++x)
        if (dist.probs[x - 1] > dist.probs[best - 1]) best = x;
    return best;
}

// fraction of exact matches
inline double exact_accuracy(const std::vector<int>& truth, const std::vector<int>& predictions) {
    if (truth.empty() || truth.size() != predictions.size())
        throw std::domain_error("exact_accuracy: empty or misaligned lists");
    long hits = 0;
    for (std::size_t j = 0; j < truth.size(); ++j)
        if (truth[j] == predictions[j]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

struct FractionWithCi {
    double value = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    long n = 0;
};

inline FractionWithCi binomial_ci(double p_hat, long n) {
    const double z = norm_ppf(0.975);
    const double half = z * std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(n));
    return {p_hat, p_hat - half, p_hat + half, n};
}

// fraction with |r_hat - r| <= k plus the normal-approximation CI
inline FractionWithCi within_k_star_accuracy(const std::vector<int>& truth,
                                             const std::vector<int>& predictions, int k = 1) {
    if (truth.empty() || truth.size() != predictions.size())
        throw std::domain_error("within_k_star_accuracy: empty or misaligned lists");
    long hits = 0;
    for (std::size_t j = 0; j < truth.size(); ++j)
        if (std::abs(truth[j] - predictions[j]) <= k) ++hits;
    return binomial_ci(static_cast<double>(hits) / static_cast<double>(truth.size()),
                       static_cast<long>(truth.size()));
}

struct PairwiseResult {
    long correct = 0;
    long counted = 0;
    double accuracy() const {
        return counted == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(counted);
    }
};

// Pairwise preference test: for each user's held-out item against every
// trained rated item with a different true rating, the pair counts correct
// when the predicted probit-score order matches the observed rating order.
// Predicted ties score incorrect; users with no comparable pairs drop out of
// the denominator.
inline PairwiseResult pairwise_preference_eval(const RatingMatrix& train, const RatingMatrix& test,
                                               const std::vector<McmcDraw>& ensemble) {
    if (train.users() != test.users() || train.items() != test.items())
        throw std::invalid_argument("pairwise_preference_eval: train/test shape mismatch");
    PairwiseResult result;
    for (int u = 0; u < test.users(); ++u) {
        const auto& held = test.row(u);
        if (held.empty()) continue;
        for (int te : held) {
            const auto& t = test.entries()[te];
            const double score_test = posterior_category_probs(u, t.item, ensemble).score_mean;
            for (int e : train.row(u)) {
                const auto& tr = train.entries()[e];
                if (tr.rating == t.rating) continue;  // true ties excluded
                const double score_tr = posterior_category_probs(u, tr.item, ensemble).score_mean;
                const int truth_sign = (t.rating > tr.rating) ? 1 : -1;
                const int pred_sign = (score_test > score_tr) ? 1 : (score_test < score_tr ? -1 : 0);
                ++result.counted;
                if (pred_sign == truth_sign) ++result.correct;
            }
        }
    }
    return result;
}

// items ranked by merged posterior mean, descending; ties toward the lower
// item index
inline std::vector<int> top_L_items(const std::vector<double>& mu, int L) {
    if (L < 0 || L > static_cast<int>(mu.size())) throw std::domain_error("top_L_items: bad L");
    std::vector<int> idx(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) idx[i] = static_cast<int>(i);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (mu[a] != mu[b]) return mu[a] > mu[b];
        return a < b;
    });
    idx.resize(L);
    return idx;
}

}  // namespace dfa
