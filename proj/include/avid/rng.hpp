#pragma once

// Deterministic random number generation.
//
// Two generators cover the project's needs:
//  - CounterRng: stateless, keyed by (seed, stream, index). Used for all
//    sampling-time noise so that a draw depends only on its coordinates,
//    never on evaluation order.
//  - Rng64: a small stateful engine (xoshiro256**) for training-time
//    decisions (weight init, batch selection, step/noise indices).
//
// Normal variates use Box-Muller on top of the uniform bits so results are
// identical across standard library implementations.

#include <cmath>
#include <cstdint>

namespace avid {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Uniform in (0, 1]: guarantees log() is finite in Box-Muller.
inline double bits_to_unit_open(uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

class CounterRng {
public:
    explicit CounterRng(uint64_t seed) : seed_(seed) {}

    uint64_t word(uint64_t stream, uint64_t index) const {
        uint64_t k = splitmix64(seed_ ^ (stream * 0xD6E8FEB86659FD93ull));
        return splitmix64(k ^ (index * 0xA3B195354A39B70Dull));
    }

    double uniform(uint64_t stream, uint64_t index) const {
        return bits_to_unit_open(word(stream, index));
    }

    double normal(uint64_t stream, uint64_t index) const {
        double u1 = uniform(stream, 2 * index);
        double u2 = uniform(stream, 2 * index + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }

    uint64_t seed() const { return seed_; }

private:
    uint64_t seed_;
};

// xoshiro256** 1.0 (Blackman & Vigna, public domain reference).
class Rng64 {
public:
    explicit Rng64(uint64_t seed) {
        uint64_t x = seed;
        for (auto& si : s_) {
            x = splitmix64(x + 0x9E3779B97F4A7C15ull);
            si = x;
        }
        has_spare_ = false;
    }

    uint64_t next() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    double uniform() { return bits_to_unit_open(next()); }

    // Uniform integer in [0, n) by rejection, unbiased.
    uint64_t below(uint64_t n) {
        uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t r = next();
            if (r >= threshold) {
                return r % n;
            }
        }
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(kTwoPi * u2);
        has_spare_ = true;
        return r * std::cos(kTwoPi * u2);
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace avid
