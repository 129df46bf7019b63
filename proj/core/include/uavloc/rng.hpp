#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace uavloc {

/// Seeded random source used by every randomized stage. One instance per
/// stage keeps replays deterministic regardless of what other stages do.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    double normal(double mean, double stddev) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }

    /// Rayleigh draw via inverse CDF (not provided by <random>).
    double rayleigh(double scale) {
        double u = std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
        return scale * std::sqrt(-2.0 * std::log1p(-u));
    }

    std::uint64_t integer(std::uint64_t bound) {
        return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

  private:
    std::mt19937_64 engine_;
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

/// Derives a stage seed from a base seed, a tag, and an index. Stable across
/// platforms; used so that every randomized stage owns an explicit seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                 std::uint64_t index = 0) {
    std::uint64_t h = detail::splitmix64(base);
    for (char c : tag) h = detail::splitmix64(h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
    return detail::splitmix64(h ^ index);
}

}  // namespace uavloc
