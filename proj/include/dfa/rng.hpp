#pragma once

// Seedable random source. All draws are derived from a mt19937_64 stream via
// fully specified transformations (inverse-CDF where practical), so a seed
// pins the entire output byte-for-byte. Truncated normal sampling follows the
// inverse-CDF route with log-space tail handling so brackets far from the
// mean stay exact.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>

#include "dfa/stats.hpp"

namespace dfa {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Counter-based seed split: child streams depend only on (master, tag,
// counter), so adding more consumers never perturbs existing streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t counter = 0) {
    return splitmix64(splitmix64(splitmix64(master) ^ tag) ^ counter);
}

// FNV-1a over a label; used to turn purpose strings into seed tags.
inline std::uint64_t seed_tag(std::string_view purpose) {
    std::uint64_t h = 1469598103934665603ull;
    for (char c : purpose) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t raw() { return eng_(); }

    // strictly inside (0,1)
    double uniform() { return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // unbiased integer in [0, n)
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) throw std::domain_error("uniform_int: n must be positive");
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
        std::uint64_t x;
        do {
            x = eng_();
        } while (x > limit);
        return x % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    double normal() { return norm_ppf(uniform()); }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // N(mean, sd^2) restricted to (lo, hi]; lo/hi may be -inf/+inf.
    double truncated_normal(double mean, double sd, double lo, double hi) {
        if (!(lo < hi)) throw std::domain_error("truncated_normal: lo >= hi");
        if (sd <= 0.0) {
            // degenerate: mass collapses to the mean clamped into the bracket
            if (mean <= lo) return lo;
            if (mean > hi) return hi;
            return mean;
        }
        const double a = (lo - mean) / sd;
        const double b = (hi - mean) / sd;
        const double u = uniform();
        double z;
        if (a >= 0.0) {
            // right tail: work with the survival function to avoid 1-1 cancellation
            const double lsa = log_norm_cdf(-a);  // log P(Z > a)
            const double lsb = (b == kInf) ? -kInf : log_norm_cdf(-b);
            const double lp = lsa + std::log1p(-u * (1.0 - std::exp(lsb - lsa)));
            z = -norm_ppf_from_log(lp);
        } else if (b <= 0.0) {
            const double lfb = log_norm_cdf(b);  // log P(Z <= b)
            const double lfa = (a == -kInf) ? -kInf : log_norm_cdf(a);
            const double lp = lfb + std::log1p(-u * (1.0 - std::exp(lfa - lfb)));
            z = norm_ppf_from_log(lp);
        } else {
            const double fa = norm_cdf(a);
            const double fb = norm_cdf(b);
            z = norm_ppf(fa + u * (fb - fa));
        }
        if (z < a) z = a;
        if (z > b) z = b;
        return mean + sd * z;
    }

    // Inversion by sequential search; rates here are small (IBP opens
    // Poisson(lambda/u) features).
    long poisson(double rate) {
        if (rate < 0.0) throw std::domain_error("poisson: negative rate");
        if (rate == 0.0) return 0;
        if (rate > 500.0) throw std::domain_error("poisson: rate too large for inversion");
        const double u = uniform();
        double p = std::exp(-rate), cdf = p;
        long k = 0;
        while (u > cdf && k < 100000) {
            ++k;
            p *= rate / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }

    // Marsaglia-Tsang; shape < 1 handled by the boosting identity.
    double gamma(double shape, double scale) {
        if (shape <= 0.0 || scale <= 0.0) throw std::domain_error("gamma: bad parameters");
        if (shape < 1.0) {
            const double u = uniform();
            return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v * scale;
        }
    }

    // X ~ InverseGamma(shape, scale): density x^(-shape-1) exp(-scale/x).
    double inverse_gamma(double shape, double scale) { return 1.0 / gamma(shape, 1.0 / scale); }

    double beta(double a, double b) {
        const double x = gamma(a, 1.0);
        const double y = gamma(b, 1.0);
        return x / (x + y);
    }

    std::mt19937_64& engine() { return eng_; }

  private:
    std::mt19937_64 eng_;
};

}  // namespace dfa
