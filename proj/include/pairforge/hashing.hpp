#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace pairforge {

// Stable hashes and random helpers. Everything here must produce the same
// bits on every platform: the mock backend and the pipeline's seed
// derivation are built on it, and checkpoints/replays depend on that.

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

/// 64-bit FNV-1a over the bytes of `data`, continuing from `state`.
constexpr std::uint64_t fnv1a64(std::string_view data, std::uint64_t state = kFnvOffset) {
  for (unsigned char c : data) {
    state ^= c;
    state *= kFnvPrime;
  }
  return state;
}

/// splitmix64 finalizer; turns correlated inputs into well-spread outputs.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Combine two 64-bit values into one seed.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  return mix64(base ^ mix64(salt + 0x632be59bd9b4e019ULL));
}

/// Hash a sequence of fields with a separator byte so ("ab","c") != ("a","bc").
template <typename... Parts>
std::uint64_t hash_fields(const Parts&... parts) {
  std::uint64_t h = kFnvOffset;
  ((h = fnv1a64(std::string_view(parts), h), h = fnv1a64(std::string_view("\x1f", 1), h)), ...);
  return mix64(h);
}

/// Map 64 random bits to [0, 1) with 53 bits of precision.
constexpr double unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// The engine used everywhere randomness is needed. mt19937_64's output
/// sequence is fixed by the standard, and its state streams as text.
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) { return unit_interval(rng()); }

std::string to_hex(std::uint64_t value);

}  // namespace pairforge
