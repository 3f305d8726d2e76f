//
// Copyright 2026 The pacest Authors
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
//

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "pacest/error.hpp"

namespace pacest {

// Stream roles. One independent stream per (master seed, trial, role), so
// trials can run on any worker in any order without sharing RNG state.
enum class SeedRole : std::uint64_t {
  kData1 = 1,
  kData2 = 2,
  kSeedSelect = 3,
  kNoise = 4,
  kMcKl = 5,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based derivation: pure in (master, trial, role), order-insensitive.
inline std::uint64_t derive_stream_seed(std::uint64_t master_seed,
                                        std::uint64_t trial_index,
                                        SeedRole role) {
  std::uint64_t s = splitmix64(master_seed);
  s = splitmix64(s ^ (trial_index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL));
  s = splitmix64(s ^ static_cast<std::uint64_t>(role));
  return s;
}

// mt19937_64 with stateless draw helpers. normal() always consumes exactly
// two words and keeps no cached spare, so a stream's content depends only on
// the count of prior draws, not on which distributions produced them.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in (0, 1].
  double uniform_positive() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  double normal() {
    const double u1 = uniform_positive();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Unbiased integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw Error(ErrorCode::kInputConfig, "uniform_index over empty range");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t draw;
    do {
      draw = next_u64();
    } while (draw >= limit && limit != 0);
    return draw % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // k distinct indices from [0, n), partial Fisher-Yates order.
  std::vector<std::uint64_t> subset_without_replacement(std::uint64_t n,
                                                        std::uint64_t k) {
    if (k > n) {
      throw Error(ErrorCode::kInputConfig,
                  "subset size exceeds population size");
    }
    std::vector<std::uint64_t> pool(n);
    for (std::uint64_t i = 0; i < n; ++i) pool[i] = i;
    for (std::uint64_t i = 0; i < k; ++i) {
      const std::uint64_t j = i + uniform_index(n - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }

 private:
  std::mt19937_64 engine_;
};

inline Rng stream_rng(std::uint64_t master_seed, std::uint64_t trial_index,
                      SeedRole role) {
  return Rng(derive_stream_seed(master_seed, trial_index, role));
}

}  // namespace pacest
