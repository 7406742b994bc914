#ifndef RATIO_RNG_HPP
#define RATIO_RNG_HPP

#include <cstdint>
#include <initializer_list>

#include "ratio/normal.hpp"

namespace ratio {

/// splitmix64 step; also used to combine seed components.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Deterministic seed derived from a list of components (study seed, method
/// tag, level, replication, sample index, ...). Order-sensitive.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t state = 0x853c49e6748fea9bull;
    std::uint64_t h = 0;
    for (std::uint64_t p : parts) {
        state ^= p + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        h = splitmix64(state);
    }
    return h;
}

/// Small counter-free generator (xoshiro256** seeded from splitmix64).
/// One instance per sample keeps all sampling reproducible regardless of
/// thread scheduling.
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
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
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1), both endpoints excluded.
    double uniform01_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal draw via the inverse CDF.
    double normal() { return inverse_normal_cdf(uniform01_open()); }

    /// Uniform draw on [-1, 1].
    double uniform_sym() { return 2.0 * uniform01() - 1.0; }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t state_[4];
};

} // namespace ratio

#endif
