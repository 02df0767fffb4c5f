#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace longitrack {

/// FNV-1a 64-bit hash.
inline constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64_bytes(const void* data, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace detail {

inline constexpr std::uint64_t kSplitmixGolden = 0x9e3779b97f4a7c15ull;

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

}  // namespace detail

/// The (index+1)-th output of a splitmix64 generator seeded with `seed`.
/// Used to derive per-case seeds from a master seed.
inline constexpr std::uint64_t splitmix64_at(std::uint64_t seed,
                                             std::uint64_t index) {
  return detail::splitmix64_mix(seed +
                                (index + 1) * detail::kSplitmixGolden);
}

/// Deterministic random stream identified by (seed, label). The same pair
/// always reproduces the same draw sequence; distinct labels give
/// decorrelated streams, so concurrent workers take one label each.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view label)
      : seed_(seed),
        label_(label),
        state_(detail::splitmix64_mix(seed ^ fnv1a64(label))) {}

  std::uint64_t seed() const { return seed_; }
  const std::string& label() const { return label_; }

  std::uint64_t next_u64() {
    state_ += detail::kSplitmixGolden;
    return detail::splitmix64_mix(state_);
  }

  /// Unbiased integer in [lo, hi], inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span =
        static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next_u64());  // full range
    const std::uint64_t limit = (0 - span) % span;
    std::uint64_t r = next_u64();
    while (r < limit) r = next_u64();
    return lo + static_cast<std::int64_t>(r % span);
  }

  /// Uniform double in [0, 1).
  double uniform_real() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform_real(double lo, double hi) {
    return lo + (hi - lo) * uniform_real();
  }

  /// Gaussian draw via Box-Muller; consumes two raw outputs per call.
  double normal(double mean, double stddev) {
    const double u1 =
        static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform_real();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  std::uint64_t seed_;
  std::string label_;
  std::uint64_t state_;
};

}  // namespace longitrack
