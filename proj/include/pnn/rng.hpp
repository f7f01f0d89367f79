#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "pnn/errors.hpp"

namespace pnn {

/// Seedable pseudo-random source. The generator is xoshiro256** with the
/// state expanded from the 64-bit seed by a splitmix64 chain, implemented
/// in-repo so that identical seeds give identical draw sequences regardless
/// of platform library versions. Gaussian draws use the Box-Muller transform
/// (the second variate of each pair is cached, so draws alternate between
/// computing and consuming). Changing any of this invalidates recorded runs;
/// see README.md.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) {
            x += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            word = z ^ (z >> 31);
        }
    }

    std::uint64_t seed() const { return seed_; }

    /// Independent stream derived from this generator's seed. Derivation is
    /// seed XOR stream_id; the splitmix64 expansion decorrelates the states.
    Rng child(std::uint64_t stream_id) const { return Rng(seed_ ^ stream_id); }

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

    /// Uniform double in [0, 1), 53 significant bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound). Modulo rejection keeps the draw
    /// unbiased and platform-independent.
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) throw ConfigError("below: bound must be positive");
        const std::uint64_t reject = (~bound + 1) % bound;  // 2^64 mod bound
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= reject) return r % bound;
        }
    }

    /// One draw from N(mean, stddev^2). stddev = 0 returns mean exactly and
    /// consumes no randomness.
    double gaussian(double mean, double stddev) {
        if (stddev < 0.0)
            throw ConfigError(detail::msg("gaussian: stddev must be >= 0, got ", stddev));
        if (stddev == 0.0) return mean;
        if (have_spare_) {
            have_spare_ = false;
            return mean + stddev * spare_;
        }
        const double u1 = 1.0 - next_unit();  // (0, 1], keeps log finite
        const double u2 = next_unit();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return mean + stddev * radius * std::cos(angle);
    }

    /// In-place Fisher-Yates shuffle.
    template <class T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t seed_;
    std::uint64_t state_[4] = {};
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace pnn
