// SPDX-License-Identifier: Apache-2.0
//
// Seed derivation for reproducible Monte-Carlo streams.
//
// Every experiment owns one 64-bit base seed. Independent streams are
// obtained as a pure function of (base seed, purpose label, index), so the
// random numbers consumed by trial t never depend on how trials are
// scheduled across worker threads.

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mmb {

using Engine = std::mt19937_64;

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a over the label bytes
constexpr std::uint64_t hash_label(std::string_view label) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view label,
                                    std::uint64_t index = 0) noexcept {
  return mix64(mix64(base ^ hash_label(label)) + mix64(index + 0x632be59bd9b4e019ULL));
}

inline Engine make_engine(std::uint64_t base, std::string_view label,
                          std::uint64_t index = 0) {
  return Engine{derive_seed(base, label, index)};
}

}  // namespace mmb
