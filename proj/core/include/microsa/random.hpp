#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace microsa {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed mixing function M(h, v1, ..., vn).
///
/// Folds each component into the state as h <- splitmix64(h ^ splitmix64(v + position_tag)),
/// so that permuting the components changes the result. All seeds in the
/// library are derived through this function.
constexpr std::uint64_t mix_seed(std::uint64_t root, std::initializer_list<std::uint64_t> parts) noexcept {
    std::uint64_t h = splitmix64(root);
    std::uint64_t position = 0;
    for (std::uint64_t v : parts) {
        ++position;
        h = splitmix64(h ^ splitmix64(v + position * 0xD1B54A32D192ED03ULL));
    }
    return h;
}

/// A seeded random-number stream.
///
/// Uses std::mt19937_64 (bit-exact across standard libraries) and performs its
/// own conversions to uniforms and normals, since the std distributions are
/// implementation defined.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    std::uint64_t next_u64() {
        ++draws_;
        const std::uint64_t x = engine_();
        digest_ = (digest_ ^ x) * 0x100000001B3ULL;
        return x;
    }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_open_low() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

    /// Uniform integer on [0, n) by rejection; n must be > 0.
    std::uint64_t index(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x = next_u64();
        while (x >= limit) {
            x = next_u64();
        }
        return x % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via the Box-Muller transform; pairs are cached.
    double normal() {
        if (has_cached_normal_) {
            has_cached_normal_ = false;
            return cached_normal_;
        }
        const double u1 = uniform_open_low();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925 * u2;
        cached_normal_ = radius * std::sin(angle);
        has_cached_normal_ = true;
        return radius * std::cos(angle);
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t draws() const noexcept { return draws_; }
    /// Running hash of every raw word drawn so far (for audit logs).
    std::uint64_t digest() const noexcept { return digest_; }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
    std::uint64_t draws_ = 0;
    std::uint64_t digest_ = 0xCBF29CE484222325ULL;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

} // namespace microsa
