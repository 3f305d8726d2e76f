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

#include "pacest/rng.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "pacest/parallel.hpp"

using pacest::Rng;
using pacest::SeedRole;

TEST_CASE("seed derivation is pure and collision-free over roles/trials") {
  const std::uint64_t a = pacest::derive_stream_seed(1, 2, SeedRole::kNoise);
  CHECK(a == pacest::derive_stream_seed(1, 2, SeedRole::kNoise));

  std::set<std::uint64_t> seen;
  for (std::uint64_t t = 0; t < 2000; ++t) {
    for (auto role : {SeedRole::kData1, SeedRole::kData2, SeedRole::kSeedSelect,
                      SeedRole::kNoise, SeedRole::kMcKl}) {
      seen.insert(pacest::derive_stream_seed(99, t, role));
    }
  }
  CHECK(seen.size() == 2000 * 5);
}

TEST_CASE("uniform_index is in range and roughly uniform") {
  Rng rng(123);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 50000; ++i) {
    const auto x = rng.uniform_index(5);
    REQUIRE(x < 5);
    ++counts[x];
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("normal moments") {
  Rng rng(7);
  double sum = 0.0, sumsq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sumsq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sumsq / n - 1.0) < 0.03);
}

TEST_CASE("subset_without_replacement distinct and exhaustive") {
  Rng rng(11);
  const auto sub = rng.subset_without_replacement(100, 30);
  REQUIRE(sub.size() == 30);
  std::set<std::uint64_t> s(sub.begin(), sub.end());
  CHECK(s.size() == 30);
  for (auto x : sub) CHECK(x < 100);

  const auto full = rng.subset_without_replacement(8, 8);
  std::set<std::uint64_t> f(full.begin(), full.end());
  CHECK(f.size() == 8);

  CHECK(rng.subset_without_replacement(5, 0).empty());
  CHECK_THROWS_AS(rng.subset_without_replacement(3, 4), pacest::Error);
}

TEST_CASE("ordered reduce is deterministic across worker counts") {
  auto run = [](unsigned workers) {
    std::vector<double> merged;
    pacest::ordered_trial_reduce<std::vector<double>>(
        997, 64, workers,
        [](std::uint64_t k, std::vector<double>& acc) {
          acc.push_back(std::sin(static_cast<double>(k)));
        },
        std::vector<double>{},
        [&](std::vector<double>&& acc) {
          merged.insert(merged.end(), acc.begin(), acc.end());
        });
    return merged;
  };
  const auto w1 = run(1);
  const auto w4 = run(4);
  const auto w7 = run(7);
  REQUIRE(w1.size() == 997);
  CHECK(w1 == w4);
  CHECK(w1 == w7);
}

TEST_CASE("ordered reduce propagates exceptions") {
  auto boom = [](std::uint64_t k, int&) {
    if (k == 500) throw pacest::Error(pacest::ErrorCode::kContractRadius,
                                      "radius exceeded", k);
  };
  CHECK_THROWS_AS(pacest::ordered_trial_reduce<int>(
                      1000, 16, 4, boom, 0, [](int&&) {}),
                  pacest::Error);
}
