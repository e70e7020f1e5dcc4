#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace knnxkde {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to turn structured keys into independent seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derive a child seed from a master seed and a key path. The result depends
/// only on the values, never on call order, so concurrent consumers that
/// derive their own stream get scheduling-independent results.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = mix64(master);
  for (auto k : keys) h = mix64(h ^ mix64(k));
  return h;
}

/// FNV-1a, stable across platforms (std::hash is not).
constexpr std::uint64_t hash_string(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed drawn from the OS entropy source.
std::uint64_t entropy_seed();

} // namespace knnxkde
