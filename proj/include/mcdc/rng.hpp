#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace mcdc {

// Seedable, splittable pseudo-random stream (xoshiro256++ core, splitmix64
// seeding). Every stochastic operation in this library takes one of these
// explicitly, so runs are bit-reproducible across platforms; the <random>
// distributions are avoided on purpose because their output is not pinned
// by the standard.
class RngStream {
public:
    explicit RngStream(uint64_t seed) : origin_(seed) {
        uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0,1) with 53 random mantissa bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    float next_float() { return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f; }

    // Standard normal via Box-Muller; the spare value is cached in-stream.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Unbiased integer in [0, n) by rejection.
    uint64_t uniform_index(uint64_t n) {
        if (n <= 1) return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    // Child stream derived from this stream's construction seed and a label;
    // independent of how many draws were made, so call sites stay decoupled.
    RngStream split(uint64_t label) const {
        uint64_t x = origin_ ^ 0x9e3779b97f4a7c15ULL;
        x = splitmix64(x) ^ label;
        return RngStream(splitmix64(x));
    }

    RngStream split(std::string_view label, uint64_t index = 0) const {
        uint64_t h = 1469598103934665603ULL; // FNV-1a
        for (char ch : label) {
            h ^= static_cast<unsigned char>(ch);
            h *= 1099511628211ULL;
        }
        return split(h ^ (index * 0xff51afd7ed558ccdULL));
    }

    uint64_t origin_seed() const { return origin_; }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static uint64_t splitmix64(uint64_t& x) {
        uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    uint64_t origin_;
    std::array<uint64_t, 4> state_{};
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace mcdc
