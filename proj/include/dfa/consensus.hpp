#pragma once

// Semi-local consensus Monte Carlo: shard the users, run an independent chain
// per shard on its users with the full item set, merge the global item
// effects rho by precision weighting, then resample-and-filter shard draws to
// build merged prediction ensembles. Feature structure stays shard-local.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "dfa/core.hpp"
#include "dfa/rng.hpp"
#include "dfa/sampler.hpp"

namespace dfa {

enum class SplitStrategy { RoundRobin, Contiguous, SeededShuffle };

struct ShardPlan {
    int S = 1;
    std::vector<int> assignment;          // user -> shard
    std::vector<std::vector<int>> users;  // per-shard user lists
};

// Balanced partition of the m users into S shards (sizes differ by at most 1).
inline ShardPlan split_users(int m, int S, SplitStrategy strategy, std::uint64_t seed = 0) {
    if (S < 1 || S > m) throw std::domain_error("split_users: need 1 <= S <= m");
    ShardPlan plan;
    plan.S = S;
    plan.assignment.assign(m, 0);
    plan.users.assign(S, {});
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    if (strategy == SplitStrategy::SeededShuffle) {
        Rng rng(derive_seed(seed, seed_tag("split-users")));
        for (int j = m - 1; j > 0; --j)
            std::swap(order[j], order[static_cast<int>(rng.uniform_int(j + 1))]);
    }
    if (strategy == SplitStrategy::Contiguous) {
        // first (m mod S) shards take the extra user
        const int base = m / S, extra = m % S;
        int next = 0;
        for (int s = 0; s < S; ++s) {
            const int size = base + (s < extra ? 1 : 0);
            for (int j = 0; j < size; ++j) plan.users[s].push_back(order[next++]);
        }
    } else {
        for (int j = 0; j < m; ++j) plan.users[j % S].push_back(order[j]);
    }
    for (int s = 0; s < S; ++s) {
        std::sort(plan.users[s].begin(), plan.users[s].end());
        for (int u : plan.users[s]) plan.assignment[u] = s;
    }
    return plan;
}

struct EpsilonRule {
    double epsilon = kInf;
};
struct KeepFraction {
    double q = 0.2;
};
using FilterRule = std::variant<EpsilonRule, KeepFraction>;

enum class ResampleMode { PerIteration, PerShard };

struct CmcConfig {
    int S = 1;
    ChainConfig chain{};  // per-shard template; shard seeds derive from chain.seed
    FilterRule filter = KeepFraction{0.2};
    ResampleMode resample = ResampleMode::PerIteration;
    NormalPrior rho_merge_prior{};  // flat by default
    int jobs = 1;
};

// Seed for shard s, split off the master so shard streams never interact.
inline std::uint64_t shard_seed(std::uint64_t master, int s) {
    return derive_seed(master, seed_tag("shard"), static_cast<std::uint64_t>(s));
}

// Runs one chain per shard on the restriction of the ratings to the shard's
// users (all items kept). Execution order never affects results; jobs > 1
// runs shards on worker threads.
inline std::vector<std::vector<McmcDraw>> run_shards(const RatingMatrix& ratings,
                                                     const ShardPlan& plan, const CmcConfig& cfg) {
    if (plan.S != cfg.S) throw std::invalid_argument("run_shards: plan/config shard count mismatch");
    std::vector<RatingMatrix> shards;
    shards.reserve(plan.S);
    for (int s = 0; s < plan.S; ++s) {
        shards.push_back(restrict_users(ratings, plan.users[s]));
        if (shards.back().observed() == 0)
            throw std::domain_error("run_shards: shard " + std::to_string(s) + " has no observed ratings");
    }
    std::vector<std::vector<McmcDraw>> draws(plan.S);
    auto run_one = [&](int s) {
        ChainConfig config = cfg.chain;
        config.seed = shard_seed(cfg.chain.seed, s);
        draws[s] = run_chain(shards[s], config);
    };
    const int workers = std::min(std::max(1, cfg.jobs), plan.S);
    if (workers == 1) {
        for (int s = 0; s < plan.S; ++s) run_one(s);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (int s = w; s < plan.S; s += workers) run_one(s);
            });
        for (auto& t : pool) t.join();
    }
    return draws;
}

struct ShardMoments {
    int shard = 0;
    std::vector<double> mu;     // per-item posterior mean of rho
    std::vector<double> sigma;  // per-item posterior SD (T-1 denominator)
};

inline ShardMoments shard_moments(const std::vector<McmcDraw>& draws, int shard_id = 0) {
    if (draws.empty()) throw std::domain_error("shard_moments: empty draw list");
    const int n = static_cast<int>(draws.front().params.rho.size());
    ShardMoments out;
    out.shard = shard_id;
    out.mu.assign(n, 0.0);
    out.sigma.assign(n, 0.0);
    const double T = static_cast<double>(draws.size());
    for (const auto& d : draws)
        for (int i = 0; i < n; ++i) out.mu[i] += d.params.rho[i];
    for (double& v : out.mu) v /= T;
    if (draws.size() > 1) {
        for (const auto& d : draws)
            for (int i = 0; i < n; ++i) {
                const double r = d.params.rho[i] - out.mu[i];
                out.sigma[i] += r * r;
            }
        for (double& v : out.sigma) v = std::sqrt(v / (T - 1.0));
    }
    return out;
}

struct GlobalRho {
    std::vector<double> mu;
    std::vector<double> sigma;
};

// Precision-weighted merge: 1/sigma^2 = 1/sigma0^2 + sum_s 1/sigma_s^2 and
// mu = (mu0/sigma0^2 + sum_s mu_s/sigma_s^2) * sigma^2. A flat prior drops
// the prior terms; S = 1 with a flat prior passes the moments through.
inline GlobalRho merge_rho(const std::vector<ShardMoments>& moments, const NormalPrior& prior) {
    if (moments.empty()) throw std::domain_error("merge_rho: no shard moments");
    const std::size_t n = moments.front().mu.size();
    for (const auto& m : moments)
        if (m.mu.size() != n || m.sigma.size() != n)
            throw std::invalid_argument("merge_rho: moment length mismatch");
    GlobalRho global;
    if (moments.size() == 1 && prior.flat()) {
        global.mu = moments.front().mu;
        global.sigma = moments.front().sigma;
        return global;
    }
    global.mu.assign(n, 0.0);
    global.sigma.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double prec = prior.flat() ? 0.0 : 1.0 / (prior.sd * prior.sd);
        double wsum = prior.flat() ? 0.0 : prior.mean / (prior.sd * prior.sd);
        for (const auto& m : moments) {
            if (m.sigma[i] <= 0.0)
                throw std::runtime_error(
                    "merge_rho: shard " + std::to_string(m.shard) + " has zero posterior SD for item " +
                    std::to_string(i + 1) + "; store more draws per shard");
            prec += 1.0 / (m.sigma[i] * m.sigma[i]);
            wsum += m.mu[i] / (m.sigma[i] * m.sigma[i]);
        }
        global.sigma[i] = std::sqrt(1.0 / prec);
        global.mu[i] = wsum / prec;
    }
    return global;
}

// independent draws rho~_i ~ N(mu_i, sigma_i^2)
inline std::vector<double> resample_rho(const GlobalRho& global, Rng& rng) {
    std::vector<double> rho(global.mu.size());
    for (std::size_t i = 0; i < rho.size(); ++i)
        rho[i] = global.sigma[i] == 0.0 ? global.mu[i] : rng.normal(global.mu[i], global.sigma[i]);
    return rho;
}

// mean absolute deviation across items
inline double rho_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty()) throw std::invalid_argument("rho_distance: size mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += std::fabs(a[i] - b[i]);
    return d / static_cast<double>(a.size());
}

struct FilterResult {
    std::vector<int> kept;  // indices into the draw list
    bool fallback = false;  // no draw passed epsilon; closest draw returned
};

// Keeps draws whose rho lies within epsilon of rho~ (or the q-fraction of
// closest draws). Never returns empty: when nothing passes epsilon the single
// closest draw is kept and flagged.
inline FilterResult filter_draws(const std::vector<McmcDraw>& draws, const std::vector<double>& rho_tilde,
                                 const FilterRule& rule) {
    if (draws.empty()) throw std::domain_error("filter_draws: empty draw list");
    std::vector<double> dist(draws.size());
    for (std::size_t d = 0; d < draws.size(); ++d)
        dist[d] = rho_distance(draws[d].params.rho, rho_tilde);
    FilterResult res;
    if (std::holds_alternative<EpsilonRule>(rule)) {
        const double eps = std::get<EpsilonRule>(rule).epsilon;
        if (!(eps > 0.0)) throw std::domain_error("filter_draws: epsilon must be positive");
        for (std::size_t d = 0; d < draws.size(); ++d)
            if (dist[d] < eps) res.kept.push_back(static_cast<int>(d));
        if (res.kept.empty()) {
            res.fallback = true;
            res.kept.push_back(static_cast<int>(
                std::min_element(dist.begin(), dist.end()) - dist.begin()));
        }
    } else {
        const double q = std::get<KeepFraction>(rule).q;
        if (!(q > 0.0 && q <= 1.0)) throw std::domain_error("filter_draws: q outside (0,1]");
        const auto count = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::floor(q * static_cast<double>(draws.size()) + 1e-9)));
        std::vector<int> order(draws.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dist[a] < dist[b]; });
        order.resize(count);
        std::sort(order.begin(), order.end());
        res.kept = std::move(order);
    }
    return res;
}

struct ShardPredictionContext {
    int shard = 0;
    std::vector<McmcDraw> draws;  // kept draws with rho replaced by rho~
    bool fallback = false;
};

// Builds per-shard prediction ensembles: resample rho~ from the merged
// posterior (per stored iteration by default, or once per shard), filter the
// shard's draws by closeness of their stored rho, and hand back the kept
// draws with rho~ substituted.
inline std::vector<ShardPredictionContext> merged_predict(
    const std::vector<std::vector<McmcDraw>>& shard_draws, const GlobalRho& global,
    const FilterRule& rule, ResampleMode mode, Rng& rng) {
    std::vector<ShardPredictionContext> contexts;
    contexts.reserve(shard_draws.size());
    for (std::size_t s = 0; s < shard_draws.size(); ++s) {
        const auto& draws = shard_draws[s];
        if (draws.empty()) throw std::domain_error("merged_predict: shard with no draws");
        ShardPredictionContext ctx;
        ctx.shard = static_cast<int>(s);
        if (mode == ResampleMode::PerShard) {
            const auto rho_tilde = resample_rho(global, rng);
            const auto filt = filter_draws(draws, rho_tilde, rule);
            ctx.fallback = filt.fallback;
            for (int d : filt.kept) {
                McmcDraw draw = draws[d];
                draw.params.rho = rho_tilde;
                ctx.draws.push_back(std::move(draw));
            }
        } else {
            // one rho~ per stored iteration; keep iterations whose stored rho
            // is close to their own rho~
            std::vector<std::vector<double>> tilde(draws.size());
            std::vector<double> dist(draws.size());
            for (std::size_t d = 0; d < draws.size(); ++d) {
                tilde[d] = resample_rho(global, rng);
                dist[d] = rho_distance(draws[d].params.rho, tilde[d]);
            }
            std::vector<int> kept;
            if (std::holds_alternative<EpsilonRule>(rule)) {
                const double eps = std::get<EpsilonRule>(rule).epsilon;
                if (!(eps > 0.0)) throw std::domain_error("merged_predict: epsilon must be positive");
                for (std::size_t d = 0; d < draws.size(); ++d)
                    if (dist[d] < eps) kept.push_back(static_cast<int>(d));
                if (kept.empty()) {
                    ctx.fallback = true;
                    kept.push_back(static_cast<int>(std::min_element(dist.begin(), dist.end()) -
                                                    dist.begin()));
                }
            } else {
                const double q = std::get<KeepFraction>(rule).q;
                if (!(q > 0.0 && q <= 1.0)) throw std::domain_error("merged_predict: q outside (0,1]");
                const auto count = std::max<std::size_t>(
                    1, static_cast<std::size_t>(std::floor(q * static_cast<double>(draws.size()) + 1e-9)));
                std::vector<int> order(draws.size());
                std::iota(order.begin(), order.end(), 0);
                std::stable_sort(order.begin(), order.end(),
                                 [&](int a, int b) { return dist[a] < dist[b]; });
                order.resize(count);
                std::sort(order.begin(), order.end());
                kept = std::move(order);
            }
            for (int d : kept) {
                McmcDraw draw = draws[d];
                draw.params.rho = tilde[d];
                ctx.draws.push_back(std::move(draw));
            }
        }
        contexts.push_back(std::move(ctx));
    }
    return contexts;
}

}  // namespace dfa
