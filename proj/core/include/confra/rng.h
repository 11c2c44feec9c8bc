// Copyright 2026 The Confra Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Seeded randomness with results that do not depend on the standard
// library's distribution implementations.

#ifndef CONFRA_RNG_H_
#define CONFRA_RNG_H_

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace confra {

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Per-repetition / per-stream seed: hash(base, index).
inline std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t index) {
  return SplitMix64(SplitMix64(base) ^ (index * 0xD1B54A32D192ED03ULL));
}

// Stable 64-bit hash of a string (FNV-1a folded through SplitMix64).
inline std::uint64_t HashString(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return SplitMix64(h);
}

// Unbiased integer in [0, bound) by rejection.
inline std::uint64_t UniformBelow(std::mt19937_64& gen, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = gen();
  } while (x >= limit);
  return x % bound;
}

// Uniform double in [0, 1) with 53 random bits.
inline double UniformUnit(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

template <typename T>
void SeededShuffle(std::span<T> items, std::mt19937_64& gen) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = UniformBelow(gen, i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace confra

#endif  // CONFRA_RNG_H_
