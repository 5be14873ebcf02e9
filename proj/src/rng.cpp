#include "clab/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace clab {

double Rng::normal() {
    // 1 - u keeps the log argument in (0, 1].
    double u1 = 1.0 - next_double();
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::gamma(double alpha) {
    if (alpha <= 0.0) {
        throw std::invalid_argument("Rng::gamma: alpha must be > 0");
    }
    if (alpha < 1.0) {
        double g = gamma(alpha + 1.0);
        double u = 1.0 - next_double(); // (0, 1]
        return g * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = next_double();
        if (u < 1.0 - 0.0331 * x * x * x * x) {
            return d * v;
        }
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
            return d * v;
        }
    }
}

double Rng::beta(double alpha) {
    if (alpha <= 0.0) {
        throw std::invalid_argument("Rng::beta: alpha must be > 0");
    }
    for (int attempt = 0; attempt < 100; ++attempt) {
        const double g1 = gamma(alpha);
        const double g2 = gamma(alpha);
        const double sum = g1 + g2;
        if (sum <= 0.0) {
            continue; // both draws underflowed to zero
        }
        const double r = g1 / sum;
        if (r > 0.0 && r < 1.0) {
            return r;
        }
    }
    return 0.5;
}

std::size_t Rng::below(std::size_t n) {
    if (n == 0) {
        throw std::invalid_argument("Rng::below: n must be > 0");
    }
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = i;
    }
    shuffle(p);
    return p;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace clab
