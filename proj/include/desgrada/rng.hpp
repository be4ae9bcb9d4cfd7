#pragma once

#include <cmath>
#include <cstdint>

namespace desgrada {

// Counter-based randomness: stateless hashes keyed by (seed, counters), so any
// draw can be reproduced independently of evaluation order. All generators
// here are fixed algorithms, bit-stable across platforms.

inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a) {
    return mix64(mix64(seed) ^ a);
}

inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return mix64(counter_hash(seed, a) ^ b);
}

inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                                  std::uint64_t c) {
    return mix64(counter_hash(seed, a, b) ^ c);
}

inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                                  std::uint64_t c, std::uint64_t d) {
    return mix64(counter_hash(seed, a, b, c) ^ d);
}

// Uniform double in [0, 1) from a hash value.
inline double to_unit(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Small sequential PRNG for shuffles and initializer streams.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() { return mix_state(); }

    double uniform() { return to_unit(mix_state()); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; avoids implementation-defined std distributions.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Unbiased integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) return 0;
        std::uint64_t threshold = (0ull - n) % n;
        for (;;) {
            std::uint64_t r = mix_state();
            if (r >= threshold) return r % n;
        }
    }

private:
    std::uint64_t mix_state() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix64(state_);
    }

    std::uint64_t state_;
};

// Fisher-Yates with a caller-owned generator.
template <typename Vec>
void shuffle_indices(Vec& v, SplitMix64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace desgrada
