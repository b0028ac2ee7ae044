#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace tonalseg {

/// Portable seeded generator. std::mt19937_64 has a standardized output
/// sequence; bounded and real draws are derived here instead of through
/// the implementation-defined std distributions, so every platform
/// produces the same splits and synthetic data for a given seed.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    /// Uniform integer in [0, bound) by rejection sampling; bound > 0.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = gen_();
            if (r >= threshold) return r % bound;
        }
    }

    /// Uniform real in [0, 1) from the top 53 bits.
    double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

private:
    std::mt19937_64 gen_;
};

/// Fisher-Yates: for i = n-1 down to 1, swap slot i with slot below(i+1).
inline std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    SeededRng rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

}  // namespace tonalseg
