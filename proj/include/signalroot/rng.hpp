#pragma once

#include <cmath>
#include <cstdint>

namespace signalroot {

// Counter-based generator: Threefry-2x64, 20 rounds (Salmon et al.,
// "Parallel random numbers: as easy as 1, 2, 3").  Each (seed, stream) pair
// is an independent stream indexed by a 64-bit counter, so parallel
// simulation replicates draw identical numbers regardless of the thread
// schedule.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key0_(seed), key1_(stream) {}

    std::uint64_t next_u64() {
        if (have_) {
            have_ = false;
            return spare_;
        }
        std::uint64_t x0, x1;
        block(counter_++, x0, x1);
        spare_ = x1;
        have_ = true;
        return x0;
    }

    // uniform on [0, 1) with 53 random bits
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int r) {
        return (x << r) | (x >> (64 - r));
    }

    void block(std::uint64_t ctr, std::uint64_t& x0, std::uint64_t& x1) const {
        static constexpr int rot[8] = {16, 42, 12, 31, 16, 32, 24, 21};
        const std::uint64_t ks[3] = {key0_, key1_,
                                     key0_ ^ key1_ ^ 0x1BD11BDAA9FC1A22ull};
        x0 = ctr + ks[0];
        x1 = ks[1];
        for (int r = 0; r < 20; ++r) {
            x0 += x1;
            x1 = rotl(x1, rot[r % 8]);
            x1 ^= x0;
            if ((r + 1) % 4 == 0) {
                const std::uint64_t s = static_cast<std::uint64_t>((r + 1) / 4);
                x0 += ks[s % 3];
                x1 += ks[(s + 1) % 3] + s;
            }
        }
    }

    std::uint64_t key0_, key1_;
    std::uint64_t counter_ = 0;
    std::uint64_t spare_ = 0;
    bool have_ = false;
};

namespace detail {

// Raw two-word Threefry block for known-answer tests.
inline void threefry2x64(std::uint64_t k0, std::uint64_t k1,
                         std::uint64_t c0, std::uint64_t c1,
                         std::uint64_t& o0, std::uint64_t& o1) {
    static constexpr int rot[8] = {16, 42, 12, 31, 16, 32, 24, 21};
    const std::uint64_t ks[3] = {k0, k1, k0 ^ k1 ^ 0x1BD11BDAA9FC1A22ull};
    std::uint64_t x0 = c0 + ks[0];
    std::uint64_t x1 = c1 + ks[1];
    for (int r = 0; r < 20; ++r) {
        x0 += x1;
        x1 = (x1 << rot[r % 8]) | (x1 >> (64 - rot[r % 8]));
        x1 ^= x0;
        if ((r + 1) % 4 == 0) {
            const std::uint64_t s = static_cast<std::uint64_t>((r + 1) / 4);
            x0 += ks[s % 3];
            x1 += ks[(s + 1) % 3] + s;
        }
    }
    o0 = x0;
    o1 = x1;
}

}  // namespace detail

// Poisson variate: sequential-search inversion for small means, Hormann's
// PTRS transformed rejection for mean >= 30.
inline long long poisson_sample(CounterRng& rng, double mean) {
    if (!(mean >= 0.0)) return 0;
    if (mean == 0.0) return 0;
    if (mean < 30.0) {
        const double target = rng.next_double();
        double p = std::exp(-mean);
        double cdf = p;
        long long k = 0;
        // mean < 30 keeps this loop short; the cap is only a safety net
        while (target > cdf && k < 4000) {
            ++k;
            p *= mean / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);
    for (;;) {
        double uu = rng.next_double() - 0.5;
        double v = rng.next_double();
        double us = 0.5 - std::fabs(uu);
        double kf = std::floor((2.0 * a / us + b) * uu + mean + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<long long>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
            -mean + kf * log_mean - std::lgamma(kf + 1.0))
            return static_cast<long long>(kf);
    }
}

}  // namespace signalroot
