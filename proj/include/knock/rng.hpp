#pragma once

#include <cmath>
#include <cstdint>

namespace knock {

/**
 * Deterministic random stream (xoshiro256** seeded via splitmix64).
 *
 * All randomness in the library flows through explicitly passed Rng values,
 * so any operation is a pure function of (inputs, seed) and produces the
 * same bytes on every platform. Substreams derived with split() are
 * statistically independent, which lets batch jobs process items in
 * parallel while keeping per-item results identical to a serial run.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& s : state_) s = splitmix64(x);
        cached_normal_valid_ = false;
    }

    /// Independent substream for item `index` (counter-based derivation).
    Rng split(std::uint64_t index) const {
        std::uint64_t x = state_[0] ^ (0x9e3779b97f4a7c15ULL * (index + 1));
        std::uint64_t y = state_[2] + 0xbf58476d1ce4e5b9ULL * (index + 1);
        return Rng(splitmix_mix(x) ^ splitmix_mix(y));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    /// Uniform integer in [lo, hi], both ends inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        // multiply-shift rejection-free mapping; bias < 2^-64, irrelevant here
        const unsigned __int128 m =
            static_cast<unsigned __int128>(next_u64()) * span;
        return lo + static_cast<std::int64_t>(m >> 64);
    }

    /// Standard normal via Box-Muller (cached pair).
    double normal() {
        if (cached_normal_valid_) {
            cached_normal_valid_ = false;
            return cached_normal_;
        }
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        cached_normal_ = r * std::sin(theta);
        cached_normal_valid_ = true;
        return r * std::cos(theta);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    static std::uint64_t splitmix_mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        return splitmix_mix(x);
    }

    std::uint64_t state_[4];
    double cached_normal_ = 0.0;
    bool cached_normal_valid_ = false;
};

} // namespace knock
