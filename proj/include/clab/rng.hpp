#pragma once

#include <cstdint>
#include <vector>

namespace clab {

/// Deterministic 64-bit pseudo-random generator.
///
/// The core step is the public-domain splitmix64 mixer (Steele, Lea &
/// Flood's SplittableRandom finalizer): the 64-bit state advances by the
/// golden-ratio increment 0x9E3779B97F4A7C15 and the output is a fixed
/// xor-multiply avalanche of it. The constants are fixed here once; the same
/// seed yields the same draw sequence on every platform and run.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

    std::uint64_t seed() const { return seed_; }

    /// Next raw 64-bit word.
    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53 mantissa bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    /// Standard normal via Box-Muller; consumes exactly two uniform draws.
    double normal();

    /// Gamma(alpha, 1) via Marsaglia-Tsang squeeze for alpha >= 1 and the
    /// Gamma(alpha+1) * U^(1/alpha) boost for alpha < 1.
    double gamma(double alpha);

    /// Symmetric Beta(alpha, alpha) draw in the open interval (0, 1),
    /// computed as g1 / (g1 + g2) from two Gamma(alpha) draws.
    double beta(double alpha);

    /// Uniform integer in [0, n) by 128-bit multiply-shift of a raw word.
    std::size_t below(std::size_t n);

    /// In-place Fisher-Yates shuffle.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Uniformly random permutation of {0, ..., n-1}.
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::uint64_t seed_;
    std::uint64_t state_;
};

/// Stable derived seed for auxiliary streams (data preparation, grid cells).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

} // namespace clab
