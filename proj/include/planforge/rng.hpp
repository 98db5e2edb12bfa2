#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace planforge {

// 64-bit FNV-1a. Used for fingerprints, sub-seed derivation and sampling
// decisions; must stay stable across platforms and releases.
inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline uint64_t mix_seed(uint64_t a, uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

// Deterministic generator with hand-rolled distributions so results are
// byte-identical regardless of standard library.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(splitmix64(seed ^ 0x6a09e667f3bcc908ull)) {}

    uint64_t next_u64() {
        state_ = splitmix64(state_);
        return state_;
    }

    // Unbiased bounded draw (rejection on the top slice).
    uint64_t next_below(uint64_t bound) {
        if (bound <= 1) return 0;
        uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % bound;
    }

    // Uniform in [0,1) with 53 bits of precision.
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    bool next_bernoulli(double p) { return next_double() < p; }

    // Box-Muller; the spare value is cached.
    double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = next_double();
        } while (u1 <= 1e-300);
        u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double next_lognormal(double sigma) { return std::exp(sigma * next_normal()); }

  private:
    uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Zipf(s) over ids 0..n-1 with weight (i+1)^-s; s = 0 degenerates to uniform.
// Sampling is a binary search over the precomputed CDF.
class ZipfSampler {
  public:
    ZipfSampler(size_t n, double exponent) : cdf_(n) {
        double acc = 0.0;
        for (size_t i = 0; i < n; ++i) {
            acc += std::pow(double(i + 1), -exponent);
            cdf_[i] = acc;
        }
        total_ = acc;
    }

    size_t sample(Rng &rng) const {
        double u = rng.next_double() * total_;
        size_t lo = 0, hi = cdf_.size() - 1;
        while (lo < hi) {
            size_t mid = (lo + hi) / 2;
            if (cdf_[mid] < u)
                lo = mid + 1;
            else
                hi = mid;
        }
        return lo;
    }

    size_t size() const { return cdf_.size(); }

  private:
    std::vector<double> cdf_;
    double total_ = 0.0;
};

} // namespace planforge
