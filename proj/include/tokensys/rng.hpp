#pragma once

#include <array>
#include <cstdint>

namespace tokensys {

// SplitMix64, used for seeding and for counter-based (stateless) draws.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Maps the top 53 bits of a 64-bit word onto [0, 1).
inline double to_unit(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Stateless uniform in [0, 1) keyed by (seed, a, b). Same key, same value.
inline double keyed_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return to_unit(splitmix64(splitmix64(seed ^ 0xD1B54A32D192ED03ULL) ^ splitmix64(a * 0x9E3779B97F4A7C15ULL + b)));
}

/// xoshiro256** with SplitMix64 seeding.
///
/// All samplers in this project consume raw 64-bit words through
/// `uniform()` / `index()` so that trajectories do not depend on the
/// standard library's distribution implementations.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& w : s_) {
            x += 0x9E3779B97F4A7C15ULL;
            w = splitmix64(x - 0x9E3779B97F4A7C15ULL);
        }
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    std::uint64_t operator()() { return next(); }
    static constexpr std::uint64_t min() { return 0; }
    static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

    double uniform() { return to_unit(next()); }

    // Uniform index in [0, k); one draw.
    std::size_t index(std::size_t k) {
        auto i = static_cast<std::size_t>(uniform() * static_cast<double>(k));
        return i < k ? i : k - 1;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Independent child stream; the parent advances by one draw.
    Rng split() { return Rng(next() ^ 0xA0761D6478BD642FULL); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> s_{};
};

// Seed for replication `k` of a run seeded with `base`.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t k) {
    return splitmix64(base ^ splitmix64(k + 0x632BE59BD9B4E019ULL));
}

}  // namespace tokensys
