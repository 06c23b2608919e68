#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace cnm::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer; bijective on 64-bit words.
inline constexpr std::uint64_t mix(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

// Counter-based derivation: the value at (seed, a) never depends on how many
// other streams were consumed, so parallel consumers cannot perturb each other.
inline constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t a) {
    return mix(seed + kGolden * (a + 1));
}

inline constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return derive(derive(seed, a), b);
}

inline constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                                      std::uint64_t c) {
    return derive(derive(seed, a, b), c);
}

// FNV-1a over a label, folded into the seed. Used to give each subsystem its
// own independent stream from one master seed.
inline constexpr std::uint64_t label_seed(std::uint64_t seed, std::string_view label) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char ch : label) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001B3ull;
    }
    return mix(seed ^ h);
}

// Map 64 random bits to a double strictly inside (0, 1).
inline double uniform01(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Sequential stream with splitmix64 state advance.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += kGolden;
        return mix(state_);
    }

    double next_uniform() { return uniform01(next()); }

    // Box-Muller; consumes two words per pair, caches the second value.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Uniform integer in [0, n) by rejection on the top bits.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t v = next();
            if (v >= threshold) return v % n;
        }
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace cnm::rng
