// Copyright 2026 The snoutbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Seeded, platform-stable randomness.
//
// Two flavours live here. Hash-seeded draws (derive_seed, seeded_gaussian,
// seeded_uniform_int) are pure functions of their inputs and implement the
// "same input, same noise" behaviour of the deterministic mechanisms. Rng is
// a sequential generator for fresh noise and for the search itself. All
// transforms from raw bits to distributions are written out here instead of
// using <random> distributions, whose output differs between standard
// libraries.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string_view>
#include <utility>

#include "snoutbench/errors.hpp"

namespace snoutbench {

inline constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

// 64-bit FNV-1a.
class Fnv1a {
 public:
  void update_byte(std::uint8_t b) {
    state_ ^= b;
    state_ *= kFnvPrime;
  }
  void update(std::span<const std::uint8_t> bytes) {
    for (std::uint8_t b : bytes) update_byte(b);
  }
  void update(std::string_view s) {
    for (char c : s) update_byte(static_cast<std::uint8_t>(c));
  }
  void update_u32_le(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) update_byte(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void update_u64_le(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) update_byte(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = kFnvOffsetBasis;
};

// Incremental form of derive_seed: FNV-1a over tag || 0x00 || payload ||
// instance_seed (8 bytes, little endian). Payload pieces are appended with
// add(); finish() may be called any number of times.
class SeedHasher {
 public:
  SeedHasher(std::uint64_t instance_seed, std::string_view tag)
      : instance_seed_(instance_seed) {
    hash_.update(tag);
    hash_.update_byte(0x00);
  }

  SeedHasher& add(std::string_view bytes) {
    hash_.update(bytes);
    return *this;
  }
  SeedHasher& add(std::span<const std::uint8_t> bytes) {
    hash_.update(bytes);
    return *this;
  }
  SeedHasher& add_u32(std::uint32_t v) {
    hash_.update_u32_le(v);
    return *this;
  }

  std::uint64_t finish() const {
    Fnv1a h = hash_;
    h.update_u64_le(instance_seed_);
    return h.digest();
  }

 private:
  std::uint64_t instance_seed_;
  Fnv1a hash_;
};

inline std::uint64_t derive_seed(std::uint64_t instance_seed, std::string_view tag,
                                 std::span<const std::uint8_t> payload) {
  return SeedHasher(instance_seed, tag).add(payload).finish();
}

inline std::uint64_t derive_seed(std::uint64_t instance_seed, std::string_view tag,
                                 std::string_view payload) {
  return SeedHasher(instance_seed, tag).add(payload).finish();
}

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Combines two 64-bit values into a well-mixed seed.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t state = a ^ (b * 0xD1B54A32D192ED03ULL);
  splitmix64_next(state);
  return splitmix64_next(state);
}

// [0, 1) with 53 bits of precision.
inline double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// (0, 1): never returns an endpoint, safe under log().
inline double to_open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

inline double box_muller(double u1, double u2) {
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Draws from N(mean, sd^2) using a splitmix64 counter stream started at seed.
inline double seeded_gaussian(std::uint64_t seed, double mean, double sd) {
  if (sd == 0.0) return mean;
  std::uint64_t state = seed;
  const double u1 = to_open_unit(splitmix64_next(state));
  const double u2 = to_unit(splitmix64_next(state));
  return mean + sd * box_muller(u1, u2);
}

namespace internal {

// Unbiased integer in [0, n) by rejection; `next` yields raw 64-bit words.
template <typename NextWord>
std::uint64_t uniform_below(std::uint64_t n, NextWord&& next) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "empty range");
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = next();
    if (r >= threshold) return r % n;
  }
}

}  // namespace internal

// Uniform integer in [lo, hi] from a splitmix64 counter stream started at seed.
inline std::int64_t seeded_uniform_int(std::uint64_t seed, std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw Error(ErrorCode::kInvalidArgument, "seeded_uniform_int: hi < lo");
  if (lo == hi) return lo;
  std::uint64_t state = seed;
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(
                  internal::uniform_below(span, [&] { return splitmix64_next(state); }));
}

// Sequential generator. Satisfies UniformRandomBitGenerator so it can be
// handed to std algorithms, but the helpers below should be preferred for
// reproducibility across standard libraries.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return engine_(); }

  // [0, 1)
  double uniform() { return to_unit(engine_()); }
  // (0, 1)
  double open_uniform() { return to_open_unit(engine_()); }

  std::uint64_t uniform_below(std::uint64_t n) {
    return internal::uniform_below(n, [this] { return engine_(); });
  }

  bool bernoulli(double p) { return uniform() < p; }

  double normal() {
    const double u1 = open_uniform();
    const double u2 = uniform();
    return box_muller(u1, u2);
  }

  // Laplace(0, scale) by inverse CDF.
  double laplace(double scale) {
    const double u = open_uniform() - 0.5;
    const double magnitude = -scale * std::log1p(-2.0 * std::abs(u));
    return u < 0 ? -magnitude : magnitude;
  }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = uniform_below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  // Moves a uniformly random k-subset of `items` (in random order) to the
  // front, leaving the rest in unspecified order.
  template <typename T>
  void partial_shuffle(std::span<T> items, std::size_t k) {
    const std::size_t n = items.size();
    for (std::size_t i = 0; i < k && i < n; ++i) {
      const std::size_t j = i + uniform_below(n - i);
      std::swap(items[i], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace snoutbench
