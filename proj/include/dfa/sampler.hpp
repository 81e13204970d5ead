#pragma once

// Single-chain MCMC for the double feature allocation model: the row-wise
// Gibbs/reversible-jump update for A, two-point Gibbs for B, truncated-normal
// data augmentation for the probit scores, and conjugate updates for tau,
// theta, rho and the B inclusion probability. Kernels mutate a ChainState in
// place; sweep() composes them in a fixed order and run_chain() handles
// burn-in, thinning and draw storage.
//
// A per-entry cache of the current probit mean is kept so that all two-point
// likelihood ratios touch only the entries a flip actually affects. The cache
// is rebuilt from scratch at the start of every sweep.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dfa/core.hpp"
#include "dfa/ibp.hpp"
#include "dfa/mf.hpp"
#include "dfa/rng.hpp"

namespace dfa {

enum class InitStrategy { Prior, Mf };

struct MfInitConfig {
    std::vector<int> k_grid{4, 8, 12, 16};
    std::vector<double> lambda_grid{0.01, 0.05, 0.1};
    int folds = 3;
    double lr = 0.02;
    int epochs = 40;
};

struct ChainConfig {
    long iterations = 1000;
    long burn_in = 500;
    long thin = 5;
    std::uint64_t seed = 1;
    Hyperparams hyper{};
    InitStrategy init = InitStrategy::Prior;
    MfInitConfig mf_init{};
};

struct ChainState {
    FeatureAllocation alloc;
    ModelParams params;
    LatentScores scores;  // aligned with ratings.entries()
    double p_b = 0.1;
    Rng rng;
    long iteration = 0;

    // caches, rebuilt each sweep and maintained incrementally in between
    std::vector<double> mean;   // probit mean per observed entry
    std::vector<int> col_sums;  // m_k per feature

    // diagnostics
    long rj_proposals = 0;
    long rj_accepts = 0;
    std::vector<char> rho_no_data;  // items left unchanged under a flat prior

    explicit ChainState(std::uint64_t seed) : rng(seed) {}
};

inline void refresh_mean_cache(ChainState& state, const RatingMatrix& ratings) {
    state.mean.resize(ratings.observed());
    for (std::size_t e = 0; e < ratings.observed(); ++e) {
        const auto& entry = ratings.entries()[e];
        state.mean[e] = probit_mean(entry.user, entry.item, state.alloc, state.params);
    }
}

inline void refresh_col_sums(ChainState& state) {
    const int K = state.alloc.K();
    state.col_sums.assign(K, 0);
    for (int k = 0; k < K; ++k) state.col_sums[k] = state.alloc.A.col_sum(k);
}

// Conditional probability of A_uk = 1 for a non-singular feature: prior
// weight m_{-u,k}/m against the row likelihood under both values.
inline double a_entry_cond_prob(const ChainState& state, const RatingMatrix& ratings, int u, int k) {
    const int m = state.alloc.users();
    const int m_excl = state.col_sums[k] - state.alloc.A(u, k);
    if (m_excl == 0) throw std::domain_error("a_entry_cond_prob: singular feature");
    const double p = conditional_inclusion_prob(m_excl, m);
    const int cur = state.alloc.A(u, k);
    const double theta = state.params.theta[k];
    double delta = 0.0;  // log L(A_uk=1) - log L(A_uk=0)
    for (int e : ratings.row(u)) {
        const auto& entry = ratings.entries()[e];
        if (!state.alloc.B(entry.item, k)) continue;
        const double mean1 = state.mean[e] + (cur ? 0.0 : theta);
        const double mean0 = state.mean[e] - (cur ? theta : 0.0);
        delta += log_category_prob(mean1, state.params.tau, entry.rating) -
                 log_category_prob(mean0, state.params.tau, entry.rating);
    }
    const double logit = std::log(p) - std::log1p(-p) + delta;
    return 1.0 / (1.0 + std::exp(-logit));
}

namespace detail {

inline void flip_A(ChainState& state, const RatingMatrix& ratings, int u, int k, int value) {
    const int cur = state.alloc.A(u, k);
    if (cur == value) return;
    const double sign = value ? 1.0 : -1.0;
    const double theta = state.params.theta[k];
    for (int e : ratings.row(u)) {
        const auto& entry = ratings.entries()[e];
        if (state.alloc.B(entry.item, k)) state.mean[e] += sign * theta;
    }
    state.alloc.A.set(u, k, static_cast<std::uint8_t>(value));
    state.col_sums[k] += value ? 1 : -1;
}

}  // namespace detail

// Row update for A (steps 1-3): Gibbs on non-singular features, then a
// reversible-jump swap of the user's singular features for Poisson(lambda/n)
// fresh ones with prior-drawn theta and B columns. Priors and proposals
// cancel, so the acceptance ratio is the row likelihood ratio alone.
inline void update_row_A(ChainState& state, int u, const RatingMatrix& ratings,
                         const Hyperparams& hyper) {
    const int n = state.alloc.items();

    // step 1: two-point Gibbs wherever the feature survives without u
    for (int k = 0; k < state.alloc.K(); ++k) {
        if (state.col_sums[k] - state.alloc.A(u, k) == 0) continue;
        const double p1 = a_entry_cond_prob(state, ratings, u, k);
        detail::flip_A(state, ratings, u, k, state.rng.bernoulli(p1) ? 1 : 0);
    }

    // step 2: propose replacing the singular features
    std::vector<int> singular;
    for (int k = 0; k < state.alloc.K(); ++k)
        if (state.col_sums[k] - state.alloc.A(u, k) == 0) singular.push_back(k);

    const long fresh = state.rng.poisson(hyper.lambda / n);
    std::vector<double> new_theta(fresh);
    std::vector<std::vector<std::uint8_t>> new_b_cols(fresh, std::vector<std::uint8_t>(n, 0));
    for (long j = 0; j < fresh; ++j) {
        new_theta[j] = state.rng.normal(0.0, hyper.sigma0_theta);
        for (int i = 0; i < n; ++i) new_b_cols[j][i] = state.rng.bernoulli(state.p_b) ? 1 : 0;
    }

    // per-item mean shift on u's row if the proposal were accepted
    std::vector<double> shift(n, 0.0);
    for (int k : singular) {
        const double theta = state.params.theta[k];
        for (int i = 0; i < n; ++i)
            if (state.alloc.B(i, k)) shift[i] -= theta;
    }
    for (long j = 0; j < fresh; ++j)
        for (int i = 0; i < n; ++i)
            if (new_b_cols[j][i]) shift[i] += new_theta[j];

    // step 3: accept with the row likelihood ratio
    double delta = 0.0;
    for (int e : ratings.row(u)) {
        const auto& entry = ratings.entries()[e];
        if (shift[entry.item] == 0.0) continue;
        delta += log_category_prob(state.mean[e] + shift[entry.item], state.params.tau, entry.rating) -
                 log_category_prob(state.mean[e], state.params.tau, entry.rating);
    }
    ++state.rj_proposals;
    if (std::log(state.rng.uniform()) >= delta) return;
    ++state.rj_accepts;

    for (int e : ratings.row(u)) {
        const auto& entry = ratings.entries()[e];
        state.mean[e] += shift[entry.item];
    }
    if (!singular.empty()) {
        std::vector<double> theta_next;
        std::vector<char> drop(state.alloc.K(), 0);
        for (int k : singular) drop[k] = 1;
        for (int k = 0; k < state.alloc.K(); ++k)
            if (!drop[k]) theta_next.push_back(state.params.theta[k]);
        state.alloc.A.remove_columns(singular);
        state.alloc.B.remove_columns(singular);
        state.params.theta = std::move(theta_next);
        std::vector<int> sums_next;
        for (int k = 0; k < static_cast<int>(state.col_sums.size()); ++k)
            if (!drop[k]) sums_next.push_back(state.col_sums[k]);
        state.col_sums = std::move(sums_next);
    }
    for (long j = 0; j < fresh; ++j) {
        std::vector<std::uint8_t> a_col(state.alloc.users(), 0);
        a_col[u] = 1;
        state.alloc.A.append_column(a_col);
        state.alloc.B.append_column(new_b_cols[j]);
        state.params.theta.push_back(new_theta[j]);
        state.col_sums.push_back(1);
    }
}

// Conditional probability of B_ik = 1: prior Bernoulli(p_b) against the
// column likelihood over users that carry feature k and rated item i.
inline double b_entry_cond_prob(const ChainState& state, const RatingMatrix& ratings, int i, int k) {
    const int cur = state.alloc.B(i, k);
    const double theta = state.params.theta[k];
    double delta = 0.0;
    for (int e : ratings.col(i)) {
        const auto& entry = ratings.entries()[e];
        if (!state.alloc.A(entry.user, k)) continue;
        const double mean1 = state.mean[e] + (cur ? 0.0 : theta);
        const double mean0 = state.mean[e] - (cur ? theta : 0.0);
        delta += log_category_prob(mean1, state.params.tau, entry.rating) -
                 log_category_prob(mean0, state.params.tau, entry.rating);
    }
    const double logit = std::log(state.p_b) - std::log1p(-state.p_b) + delta;
    return 1.0 / (1.0 + std::exp(-logit));
}

inline void update_B_entry(ChainState& state, int i, int k, const RatingMatrix& ratings) {
    const double p1 = b_entry_cond_prob(state, ratings, i, k);
    const int value = state.rng.bernoulli(p1) ? 1 : 0;
    const int cur = state.alloc.B(i, k);
    if (cur == value) return;
    const double sign = value ? 1.0 : -1.0;
    const double theta = state.params.theta[k];
    for (int e : ratings.col(i)) {
        const auto& entry = ratings.entries()[e];
        if (state.alloc.A(entry.user, k)) state.mean[e] += sign * theta;
    }
    state.alloc.B.set(i, k, static_cast<std::uint8_t>(value));
}

// Beta posterior for the B inclusion probability.
inline BetaPrior pb_posterior(const ChainState& state, const Hyperparams& hyper) {
    long ones = 0;
    const long cells = static_cast<long>(state.alloc.items()) * state.alloc.K();
    for (int i = 0; i < state.alloc.items(); ++i)
        for (int k = 0; k < state.alloc.K(); ++k) ones += state.alloc.B(i, k);
    return {hyper.p_b_prior.a + static_cast<double>(ones),
            hyper.p_b_prior.b + static_cast<double>(cells - ones)};
}

// Beta-Bernoulli update of the B inclusion probability; skipped when fixed.
inline void update_pB(ChainState& state, const Hyperparams& hyper) {
    if (hyper.p_b_fixed) return;
    const auto post = pb_posterior(state, hyper);
    state.p_b = state.rng.beta(post.a, post.b);
}

// Data augmentation: redraw every observed entry's probit score from the
// normal truncated to its rating bracket.
inline void sample_Z(ChainState& state, const RatingMatrix& ratings) {
    state.scores.z.resize(ratings.observed());
    for (std::size_t e = 0; e < ratings.observed(); ++e) {
        const auto [lo, hi] = rating_bracket(ratings.entries()[e].rating);
        state.scores.z[e] = state.rng.truncated_normal(state.mean[e], state.params.tau, lo, hi);
    }
}

// Inverse-gamma posterior parameters for tau^2 given the current scores.
inline InverseGammaPrior tau_posterior(const ChainState& state, const RatingMatrix& ratings,
                                       const Hyperparams& hyper) {
    double rss = 0.0;
    for (std::size_t e = 0; e < ratings.observed(); ++e) {
        const double r = state.scores.z[e] - state.mean[e];
        rss += r * r;
    }
    return {hyper.tau_prior.shape + 0.5 * static_cast<double>(ratings.observed()),
            hyper.tau_prior.scale + 0.5 * rss};
}

inline void update_tau(ChainState& state, const RatingMatrix& ratings, const Hyperparams& hyper) {
    const auto post = tau_posterior(state, ratings, hyper);
    state.params.tau = std::sqrt(state.rng.inverse_gamma(post.shape, post.scale));
}

// Normal posterior for theta_k: residuals exclude feature k's own
// contribution; prior N(0, sigma0^2).
inline NormalPrior theta_posterior(const ChainState& state, const RatingMatrix& ratings,
                                   const Hyperparams& hyper, int k) {
    const double theta = state.params.theta[k];
    double sum_e = 0.0;
    long count = 0;
    for (std::size_t e = 0; e < ratings.observed(); ++e) {
        const auto& entry = ratings.entries()[e];
        if (!state.alloc.A(entry.user, k) || !state.alloc.B(entry.item, k)) continue;
        sum_e += state.scores.z[e] - state.mean[e] + theta;
        ++count;
    }
    const double tau2 = state.params.tau * state.params.tau;
    const double prec = 1.0 / (hyper.sigma0_theta * hyper.sigma0_theta) + count / tau2;
    return {(sum_e / tau2) / prec, std::sqrt(1.0 / prec)};
}

inline void update_theta(ChainState& state, const RatingMatrix& ratings, const Hyperparams& hyper) {
    for (int k = 0; k < state.alloc.K(); ++k) {
        const auto post = theta_posterior(state, ratings, hyper, k);
        const double next = state.rng.normal(post.mean, post.sd);
        const double diff = next - state.params.theta[k];
        if (diff != 0.0) {
            for (std::size_t e = 0; e < ratings.observed(); ++e) {
                const auto& entry = ratings.entries()[e];
                if (state.alloc.A(entry.user, k) && state.alloc.B(entry.item, k))
                    state.mean[e] += diff;
            }
        }
        state.params.theta[k] = next;
    }
}

// Normal posterior for rho_i over the item's observed column; under a flat
// prior with no observations there is no information and the caller keeps
// the current value.
inline NormalPrior rho_posterior(const ChainState& state, const RatingMatrix& ratings,
                                 const Hyperparams& hyper, int i) {
    const double rho = state.params.rho[i];
    double sum_e = 0.0;
    long count = 0;
    for (int e : ratings.col(i)) {
        sum_e += state.scores.z[e] - state.mean[e] + rho;
        ++count;
    }
    const double tau2 = state.params.tau * state.params.tau;
    const auto& prior = hyper.rho_prior;
    if (prior.flat()) {
        if (count == 0) return {rho, 0.0};  // sentinel: caller skips
        const double prec = count / tau2;
        return {(sum_e / tau2) / prec, std::sqrt(1.0 / prec)};
    }
    const double prec = 1.0 / (prior.sd * prior.sd) + count / tau2;
    return {(prior.mean / (prior.sd * prior.sd) + sum_e / tau2) / prec, std::sqrt(1.0 / prec)};
}

inline void update_rho(ChainState& state, const RatingMatrix& ratings, const Hyperparams& hyper) {
    state.rho_no_data.assign(state.alloc.items(), 0);
    for (int i = 0; i < state.alloc.items(); ++i) {
        if (hyper.rho_prior.flat() && ratings.col(i).empty()) {
            state.rho_no_data[i] = 1;
            continue;
        }
        const auto post = rho_posterior(state, ratings, hyper, i);
        const double next = state.rng.normal(post.mean, post.sd);
        const double diff = next - state.params.rho[i];
        if (diff != 0.0)
            for (int e : ratings.col(i)) state.mean[e] += diff;
        state.params.rho[i] = next;
    }
}

// Drop features no user carries (the IBP has no support for empty columns).
inline void compact_empty_columns(ChainState& state) {
    std::vector<int> empty;
    for (int k = 0; k < state.alloc.K(); ++k)
        if (state.col_sums[k] == 0) empty.push_back(k);
    if (empty.empty()) return;
    std::vector<char> drop(state.alloc.K(), 0);
    for (int k : empty) drop[k] = 1;
    std::vector<double> theta_next;
    std::vector<int> sums_next;
    for (int k = 0; k < state.alloc.K(); ++k)
        if (!drop[k]) {
            theta_next.push_back(state.params.theta[k]);
            sums_next.push_back(state.col_sums[k]);
        }
    state.alloc.A.remove_columns(empty);
    state.alloc.B.remove_columns(empty);
    state.params.theta = std::move(theta_next);
    state.col_sums = std::move(sums_next);
}

// One full pass in the fixed order: A rows, compaction, B entries, p_b,
// scores, tau, theta, rho.
inline void sweep(ChainState& state, const RatingMatrix& ratings, const Hyperparams& hyper) {
    refresh_mean_cache(state, ratings);
    for (int u = 0; u < state.alloc.users(); ++u) update_row_A(state, u, ratings, hyper);
    compact_empty_columns(state);
    for (int i = 0; i < state.alloc.items(); ++i)
        for (int k = 0; k < state.alloc.K(); ++k) update_B_entry(state, i, k, ratings);
    update_pB(state, hyper);
    sample_Z(state, ratings);
    update_tau(state, ratings, hyper);
    update_theta(state, ratings, hyper);
    update_rho(state, ratings, hyper);
    ++state.iteration;
}

inline ChainState init_state(const RatingMatrix& ratings, const ChainConfig& config) {
    ChainState state(config.seed);
    const auto& hyper = config.hyper;
    const int m = ratings.users();
    const int n = ratings.items();
    state.p_b = hyper.p_b;

    BinaryMatrix A, B;
    if (config.init == InitStrategy::Mf && ratings.observed() > 0) {
        const auto& mi = config.mf_init;
        auto [k, lp, lq] = cv_select_rank(ratings, mi.k_grid, mi.lambda_grid, mi.folds, mi.lr,
                                          mi.epochs, derive_seed(config.seed, seed_tag("mf-init")));
        Rng mf_rng(derive_seed(config.seed, seed_tag("mf-init-train")));
        MfModel model = train_mf(ratings, k, lp, lq, mi.lr, mi.epochs, mf_rng);
        A = BinaryMatrix(m, k);
        B = BinaryMatrix(n, k);
        for (int f = 0; f < k; ++f) {
            std::vector<double> absp(m), absq(n);
            for (int u = 0; u < m; ++u) absp[u] = std::fabs(model.p(f, u));
            for (int i = 0; i < n; ++i) absq[i] = std::fabs(model.q(f, i));
            auto median = [](std::vector<double> v) {
                std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
                return v[v.size() / 2];
            };
            const double mp = median(absp), mq = median(absq);
            for (int u = 0; u < m; ++u) A.set(u, f, absp[u] > mp ? 1 : 0);
            for (int i = 0; i < n; ++i) B.set(i, f, absq[i] > mq ? 1 : 0);
        }
        std::vector<int> dead;
        for (int f = 0; f < k; ++f)
            if (A.col_sum(f) == 0) dead.push_back(f);
        A.remove_columns(dead);
        B.remove_columns(dead);
    } else {
        IbpSample prior = sample_prior(m, hyper.lambda, state.rng);
        A = std::move(prior.A);
        B = BinaryMatrix(n, A.cols());
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < A.cols(); ++k) B.set(i, k, state.rng.bernoulli(state.p_b) ? 1 : 0);
    }
    state.alloc = FeatureAllocation(std::move(A), std::move(B));

    state.params.b0 = 2.5;
    state.params.theta.resize(state.alloc.K());
    for (double& t : state.params.theta) t = state.rng.normal(0.0, hyper.sigma0_theta);
    state.params.rho.assign(n, hyper.rho_prior.flat() ? 0.0 : hyper.rho_prior.mean);
    const auto& tp = hyper.tau_prior;
    state.params.tau = std::sqrt(tp.shape > 1.0 ? tp.scale / (tp.shape - 1.0) : tp.scale);

    refresh_col_sums(state);
    refresh_mean_cache(state, ratings);
    sample_Z(state, ratings);
    return state;
}

inline void validate_config(const ChainConfig& config) {
    if (config.iterations < 1) throw std::domain_error("ChainConfig: iterations must be >= 1");
    if (config.burn_in < 0 || config.burn_in >= config.iterations)
        throw std::domain_error("ChainConfig: burn_in must be < iterations");
    if (config.thin < 1) throw std::domain_error("ChainConfig: thin must be >= 1");
    if (!(config.hyper.lambda > 0.0)) throw std::domain_error("ChainConfig: lambda must be positive");
    if (!(config.hyper.p_b > 0.0 && config.hyper.p_b < 1.0))
        throw std::domain_error("ChainConfig: p_b must lie in (0,1)");
}

// Runs the chain and stores every thin-th draw after burn-in. A matrix with
// zero users or items is rejected; a matrix with no observed entries is
// legal (the chain then samples the prior).
inline std::vector<McmcDraw> run_chain(const RatingMatrix& ratings, const ChainConfig& config) {
    validate_config(config);
    if (ratings.users() == 0 || ratings.items() == 0)
        throw std::domain_error("run_chain: empty rating matrix");
    ChainState state = init_state(ratings, config);
    std::vector<McmcDraw> draws;
    for (long t = 1; t <= config.iterations; ++t) {
        sweep(state, ratings, config.hyper);
        if (t > config.burn_in && (t - config.burn_in) % config.thin == 0)
            draws.push_back({state.alloc, state.params, state.iteration, state.p_b});
    }
    return draws;
}

}  // namespace dfa
