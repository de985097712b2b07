#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace phmkit {

/// Deterministic RNG. The mt19937_64 engine is fully specified by the
/// standard; the distributions below are hand-rolled because the standard
/// library's distribution objects are not bit-portable across
/// implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return double(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). n must be >= 1.
    std::uint64_t uniform_int(std::uint64_t n) {
        // Rejection sampling to avoid modulo bias.
        std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % n);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller (one value per call; the pair's second
    /// half is discarded to keep the stream layout simple).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 == 0.0) {
            u1 = uniform();
        }
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
    }

private:
    std::mt19937_64 engine_;
};

/// Stable 64-bit mix of a base seed and a string tag (FNV-1a over the tag,
/// folded with the seed). Used to derive per-unit substreams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 1099511628211ull;
    }
    h ^= seed + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
}

} // namespace phmkit
