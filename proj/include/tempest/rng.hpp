#pragma once

// Seed derivation and counter-based uniforms.
//
// Every random stream in the library is keyed by (master seed, tags...), so a
// sub-experiment (one edge, one Monte-Carlo path, one beta grid point) can be
// replayed on its own and does not shift when unrelated streams are added.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace tempest {

using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a, used to turn task names into stream tags.
constexpr std::uint64_t tag(std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) noexcept {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t t : tags) h = splitmix64(h ^ splitmix64(t));
  return h;
}

inline Engine make_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  return Engine(derive_seed(seed, tags));
}

/// Uniform in [0,1) that depends only on (key, counter).
constexpr double counter_uniform(std::uint64_t key, std::uint64_t counter) noexcept {
  const std::uint64_t h = splitmix64(splitmix64(key) ^ splitmix64(counter + 0x632be59bd9b4e019ULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Stream key of the (ordered) node pair (i, j).
constexpr std::uint64_t pair_key(int i, int j) noexcept {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
         static_cast<std::uint32_t>(j);
}

}  // namespace tempest
