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

#include "pacest/bounds.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pacest/rng.hpp"

namespace pb = pacest::bounds;

TEST_CASE("bernoulli_kl basics") {
  CHECK(pb::bernoulli_kl(0.99, 0.99) == 0.0);
  CHECK(pb::bernoulli_kl(0.0, 0.5) == Catch::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(pb::bernoulli_kl(0.643, 0.99) ==
        Catch::Approx(0.998835575149533).margin(1e-12));
  // paper example context: ~1.00 within 0.02
  CHECK(std::abs(pb::bernoulli_kl(0.643, 0.99) - 1.0) < 0.02);
  CHECK(pb::bernoulli_kl(0.3, 0.0) == pb::kInfiniteDivergence);
  CHECK(pb::bernoulli_kl(0.3, 1.0) == pb::kInfiniteDivergence);
  CHECK(pb::bernoulli_kl(0.0, 0.0) == 0.0);
  CHECK(pb::bernoulli_kl(1.0, 1.0) == 0.0);
  CHECK_THROWS_AS(pb::bernoulli_kl(-0.1, 0.5), pacest::Error);
  CHECK_THROWS_AS(pb::bernoulli_kl(0.1, 1.5), pacest::Error);
}

TEST_CASE("invert_kl_bound endpoints and paper global bound") {
  CHECK(pb::invert_kl_bound(0.7, 0.0) == 0.7);
  CHECK(pb::invert_kl_bound(0.5, 10.0) == 0.0);  // ln 2 < 10
  CHECK(pb::invert_kl_bound(0.0, 1.0) == 0.0);

  const double delta = pb::invert_kl_bound(0.99, 1.0);
  CHECK(delta == Catch::Approx(0.642709427260540).margin(1e-8));
  // paper: posterior success (1-delta) <= 0.36
  CHECK(1.0 - delta <= 0.36);
  CHECK(std::abs((1.0 - delta) - 0.36) < 0.005);
}

TEST_CASE("inversion soundness property", "[property]") {
  pacest::Rng rng(0xb0u);
  for (int i = 0; i < 10000; ++i) {
    const double delta_o = 0.001 + 0.998 * rng.uniform();
    const double v = 5.0 * rng.uniform();
    const double d = pb::invert_kl_bound(delta_o, v);
    REQUIRE(d >= 0.0);
    REQUIRE(d <= delta_o);
    REQUIRE(pb::bernoulli_kl(d, delta_o) <= v + 1e-8);
    if (d > 1e-6) {
      REQUIRE(pb::bernoulli_kl(d - 1e-6, delta_o) > v);
    }
  }
}

TEST_CASE("pinsker consistency property", "[property]") {
  pacest::Rng rng(0xb1u);
  for (int i = 0; i < 10000; ++i) {
    const double delta_o = rng.uniform();
    const double delta = delta_o * rng.uniform();
    const double kl = pb::bernoulli_kl(delta, delta_o);
    REQUIRE(std::abs(delta_o - delta) <= std::sqrt(kl / 2.0) + 1e-12);
  }
}

TEST_CASE("tv advantage and generalization bound") {
  CHECK(pb::tv_advantage(0.0) == 0.0);
  CHECK(pb::tv_advantage(2.0) == Catch::Approx(1.0));
  CHECK(pb::tv_advantage(0.5) == Catch::Approx(0.5));
  CHECK(pb::generalization_bound(0.0) == 0.0);
  CHECK(pb::generalization_bound(0.5) == Catch::Approx(0.5));
  CHECK(pb::generalization_bound(2.0) == Catch::Approx(1.0));
}

TEST_CASE("binomial_prior_tail values") {
  CHECK(pb::binomial_prior_tail(5, 5, 0.5) == 0.03125);
  CHECK(pb::binomial_prior_tail(1, 10, 0.01) ==
        Catch::Approx(0.095617924991195521).margin(1e-15));
  CHECK(pb::binomial_prior_tail(1, 1, 0.37) == 0.37);
  CHECK(pb::binomial_prior_tail(3, 12, 0.3) ==
        Catch::Approx(0.74718465214499963).margin(1e-13));
  CHECK(pb::binomial_prior_tail(4, 9, 0.0) == 0.0);
  CHECK(pb::binomial_prior_tail(4, 9, 1.0) == 1.0);
  CHECK_THROWS_AS(pb::binomial_prior_tail(0, 5, 0.5), pacest::Error);
  CHECK_THROWS_AS(pb::binomial_prior_tail(6, 5, 0.5), pacest::Error);
}

namespace {

// Exact summation oracle with integer binomial coefficients (n <= 20).
double exact_tail(std::uint64_t j, std::uint64_t n, double p) {
  long double total = 0.0L;
  for (std::uint64_t l = j; l <= n; ++l) {
    std::uint64_t c = 1;
    for (std::uint64_t i = 0; i < l; ++i) c = c * (n - i) / (i + 1);
    total += static_cast<long double>(c) *
             std::pow(static_cast<long double>(p), static_cast<long double>(l)) *
             std::pow(static_cast<long double>(1.0 - p),
                      static_cast<long double>(n - l));
  }
  return static_cast<double>(total);
}

}  // namespace

TEST_CASE("binomial_prior_tail agrees with exact summation", "[property]") {
  pacest::Rng rng(0xb2u);
  for (int i = 0; i < 2000; ++i) {
    const std::uint64_t n = 1 + rng.uniform_index(20);
    const std::uint64_t j = 1 + rng.uniform_index(n);
    const double p = 0.01 + 0.98 * rng.uniform();
    const double got = pb::binomial_prior_tail(j, n, p);
    const double want = exact_tail(j, n, p);
    REQUIRE(std::abs(got - want) <= 1e-12);
  }
}

TEST_CASE("iid_individual_bound paper trend") {
  const auto b10 = pb::iid_individual_bound(10, 0.01, 1.0);
  const auto b50 = pb::iid_individual_bound(50, 0.01, 1.0);
  CHECK(b10.success_upper == Catch::Approx(0.148922777106127).margin(1e-8));
  CHECK(b50.success_upper == Catch::Approx(0.067903747873922).margin(1e-8));
  // certifies at least the paper's claimed bounds
  CHECK(b10.success_upper <= 0.17 + 0.01);
  CHECK(b50.success_upper <= 0.06 + 0.01);

  // monotone in n at fixed (p, v)
  double prev = 1.0;
  for (std::uint64_t n : {1u, 2u, 5u, 10u, 50u}) {
    const double s = pb::iid_individual_bound(n, 0.01, 1.0).success_upper;
    CHECK(s <= prev + 1e-12);
    prev = s;
  }
}

TEST_CASE("iid_individual_bound edge cases") {
  // zero budget leaves the priors
  const auto b = pb::iid_individual_bound(10, 0.01, 0.0);
  double prior_sum = 0.0;
  for (std::uint64_t j = 1; j <= 10; ++j) {
    prior_sum += pb::binomial_prior_tail(j, 10, 0.01);
  }
  CHECK(b.success_upper == Catch::Approx(prior_sum / 10.0).margin(1e-12));

  // n = 1 reduces to the single-trial inversion
  const auto b1 = pb::iid_individual_bound(1, 0.25, 0.8);
  CHECK(b1.delta_lower ==
        Catch::Approx(pb::invert_kl_bound(0.75, 0.8)).margin(2e-9));
  CHECK(pb::binomial_prior_tail(1, 1, 0.25) == 0.25);
}

TEST_CASE("prior_identification") {
  std::vector<double> uniform100(100, 0.01);
  CHECK(pb::prior_identification(uniform100).delta_o == Catch::Approx(0.99));
  std::vector<double> point{1.0};
  CHECK(pb::prior_identification(point).delta_o == 0.0);
  std::vector<double> two{0.5, 0.5};
  CHECK(pb::prior_identification(two).delta_o == 0.5);
  std::vector<double> bad{0.5, 0.6};
  CHECK_THROWS_AS(pb::prior_identification(bad), pacest::Error);
  std::vector<double> neg{1.5, -0.5};
  CHECK_THROWS_AS(pb::prior_identification(neg), pacest::Error);
}

TEST_CASE("pac_bound invariants") {
  const auto b = pb::pac_bound(0.99, 1.0);
  CHECK(b.delta_lower <= b.delta_o);
  CHECK(b.tv_advantage == Catch::Approx(std::min(0.99, std::sqrt(0.5))));
  CHECK(b.kl_advantage_nats == 1.0);
  CHECK(pb::bernoulli_kl(b.delta_lower, b.delta_o) <= 1.0 + 1e-8);
}

TEST_CASE("estimate_prior_success") {
  auto gen = [](std::uint64_t seed) {
    return pacest::Rng(seed).uniform_index(4);
  };
  auto always = [](std::uint64_t) { return true; };
  auto never = [](std::uint64_t) { return false; };
  CHECK(pb::estimate_prior_success(gen, always, 500, 7).frequency == 1.0);
  CHECK(pb::estimate_prior_success(gen, never, 500, 7).frequency == 0.0);

  auto hit2 = [](std::uint64_t x) { return x == 2; };
  const auto est = pb::estimate_prior_success(gen, hit2, 10000, 42);
  CHECK(est.half_width ==
        Catch::Approx(std::sqrt(std::log(2.0 / 0.05) / 20000.0)));
  CHECK(std::abs(est.frequency - 0.25) <= est.half_width);

  // deterministic across worker counts
  const auto w1 = pb::estimate_prior_success(gen, hit2, 10000, 42, 1);
  const auto w4 = pb::estimate_prior_success(gen, hit2, 10000, 42, 4);
  CHECK(w1.frequency == w4.frequency);
}
