// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fedsim {

/// splitmix64 finalizer. Good avalanche, cheap, and stable across platforms,
/// which keeps every derived stream reproducible from one experiment seed.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a list of tag
/// words (stream kind, round index, client id, ...). Tag order matters.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> tags) {
  std::uint64_t s = mix64(base);
  for (std::uint64_t t : tags) s = mix64(s ^ t);
  return s;
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

/// Stream kinds. Kept in one place so no two call sites can collide.
namespace stream {
inline constexpr std::uint64_t kTaskData = 0x01;
inline constexpr std::uint64_t kModelInit = 0x02;
inline constexpr std::uint64_t kClientLocal = 0x03;
inline constexpr std::uint64_t kServerBatch = 0x04;
inline constexpr std::uint64_t kSplit = 0x05;
inline constexpr std::uint64_t kSampling = 0x06;
inline constexpr std::uint64_t kEval = 0x07;
}  // namespace stream

/// Per-(round, client) local stream. Derived from the experiment seed only,
/// never from strategy settings, so two strategies that perform the same
/// local steps draw identical randomness.
inline std::uint64_t client_seed(std::uint64_t base, std::uint64_t round,
                                 std::uint64_t client_id) {
  return derive_seed(base, {stream::kClientLocal, round, client_id});
}

inline std::uint64_t server_batch_seed(std::uint64_t base,
                                       std::uint64_t round) {
  return derive_seed(base, {stream::kServerBatch, round});
}

}  // namespace fedsim
