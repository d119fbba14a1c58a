#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rankfolio {

/// SplitMix64 mixing step; used to derive well-separated seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Derives a child seed from a master seed and a tuple of stream indices.
/// Independent indices give statistically independent streams, and the
/// derivation is pure, so parallel workers can compute their own seeds.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64(master);
    for (std::uint64_t p : path) {
        s = splitmix64(s ^ splitmix64(p + 0x632BE59BD9B4E019ULL));
    }
    return s;
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return derive_seed(master, {index});
}

/// Deterministic random stream. All library sampling goes through this
/// wrapper so that a fixed seed reproduces results bit for bit.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t bits() { return gen_(); }

    /// Uniform double on the open interval (0,1); 53-bit resolution,
    /// never returns exactly 0 or 1.
    double uniform01() {
        const std::uint64_t u = gen_() >> 11;  // 53 bits
        double v = (static_cast<double>(u) + 0.5) * 0x1.0p-53;
        return v;
    }

    /// Uniform integer in [0, bound) by rejection; bound >= 1.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = bound * (UINT64_MAX / bound);
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % bound;
    }

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

}  // namespace rankfolio
