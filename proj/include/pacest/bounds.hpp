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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "pacest/error.hpp"
#include "pacest/parallel.hpp"
#include "pacest/rng.hpp"

namespace pacest::bounds {

inline constexpr double kInfiniteDivergence =
    std::numeric_limits<double>::infinity();

// Absolute bisection tolerance on probabilities.
inline constexpr double kInversionTol = 1e-10;

namespace detail {

inline void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::kInputConfig,
                std::string(name) + " must lie in [0,1]");
  }
}

// log(1 - e^x) for x <= 0.
inline double log1m_exp(double x) {
  if (x >= 0.0) return -kInfiniteDivergence;
  static const double kLogHalf = std::log(0.5);
  return x > kLogHalf ? std::log(-std::expm1(x)) : std::log1p(-std::exp(x));
}

// KL(Bern(sigma) || Bern(s)) written on the success side, with the prior
// success s supplied in log space so tails far below machine epsilon of 1
// stay meaningful (1 - s would round to 1 in plain arithmetic).
inline double kl_success_side(double sigma, double log_prior_success) {
  const double log_prior_failure = log1m_exp(log_prior_success);
  double total = 0.0;
  if (sigma > 0.0) {
    if (log_prior_success == -kInfiniteDivergence) return kInfiniteDivergence;
    total += sigma * (std::log(sigma) - log_prior_success);
  }
  if (sigma < 1.0) {
    if (log_prior_failure == -kInfiniteDivergence) return kInfiniteDivergence;
    total += (1.0 - sigma) * (std::log1p(-sigma) - log_prior_failure);
  }
  return std::max(total, 0.0);
}

// Largest sigma in [s, 1] with KL(Bern(sigma) || Bern(s)) <= v. KL is zero at
// sigma = s and increases monotonically toward sigma = 1.
inline double max_success_rate(double log_prior_success, double v) {
  const double s = std::exp(log_prior_success);
  if (v <= 0.0) return s;
  if (kl_success_side(1.0, log_prior_success) <= v) return 1.0;
  double lo = s;   // feasible
  double hi = std::nextafter(1.0, 0.0);  // infeasible
  if (kl_success_side(hi, log_prior_success) <= v) return hi;
  while (hi - lo > kInversionTol) {
    const double mid = 0.5 * (lo + hi);
    if (kl_success_side(mid, log_prior_success) <= v) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

}  // namespace detail

// D_KL(Bern(delta) || Bern(delta_o)) in nats, with 0 ln 0 = 0. Mass on a
// zero-probability side of the prior yields the distinguished +infinity.
inline double bernoulli_kl(double delta, double delta_o) {
  detail::check_probability(delta, "delta");
  detail::check_probability(delta_o, "delta_o");
  if (delta == delta_o) return 0.0;
  double total = 0.0;
  if (delta > 0.0) {
    if (delta_o == 0.0) return kInfiniteDivergence;
    total += delta * std::log(delta / delta_o);
  }
  if (delta < 1.0) {
    if (delta_o == 1.0) return kInfiniteDivergence;
    total += (1.0 - delta) * (std::log1p(-delta) - std::log1p(-delta_o));
  }
  return std::max(total, 0.0);
}

inline double nats_to_bits(double nats) { return nats / std::numbers::ln2; }

// Smallest delta in [0, delta_o] with bernoulli_kl(delta, delta_o) <= v.
// The divergence decreases monotonically in delta on [0, delta_o], so the
// returned value is the posterior failure floor implied by the MI budget.
inline double invert_kl_bound(double delta_o, double v) {
  detail::check_probability(delta_o, "delta_o");
  if (v < 0.0) throw Error(ErrorCode::kInputConfig, "mi budget must be >= 0");
  if (v == 0.0) return delta_o;
  if (delta_o == 0.0) return 0.0;
  if (delta_o == 1.0) return 1.0;
  return 1.0 - detail::max_success_rate(std::log1p(-delta_o), v);
}

// Corollary bound on the TV posterior advantage: delta_o - delta <= sqrt(v/2).
inline double tv_advantage(double v) {
  if (v < 0.0) throw Error(ErrorCode::kInputConfig, "mi budget must be >= 0");
  return std::sqrt(v / 2.0);
}

// Generalization-error bound for the identification criterion.
inline double generalization_bound(double v) {
  if (v < 0.0) throw Error(ErrorCode::kInputConfig, "mi budget must be >= 0");
  return std::sqrt(v / 2.0);
}

// log P(Binomial(n, p) >= j), evaluated in log space; stable for n up to 1e4.
inline double log_binomial_tail(std::uint64_t j, std::uint64_t n, double p) {
  detail::check_probability(p, "prior_success");
  if (j < 1 || j > n) {
    throw Error(ErrorCode::kInputConfig, "require 1 <= j <= n");
  }
  if (p == 0.0) return -kInfiniteDivergence;
  if (p == 1.0) return 0.0;
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  if (j == 1) {
    // 1 - (1-p)^n
    return detail::log1m_exp(static_cast<double>(n) * log_q);
  }
  if (j == n) return static_cast<double>(n) * log_p;
  const double nd = static_cast<double>(n);
  double max_term = -kInfiniteDivergence;
  std::vector<double> terms;
  terms.reserve(n - j + 1);
  for (std::uint64_t l = j; l <= n; ++l) {
    const double ld = static_cast<double>(l);
    const double t = std::lgamma(nd + 1.0) - std::lgamma(ld + 1.0) -
                     std::lgamma(nd - ld + 1.0) + ld * log_p +
                     (nd - ld) * log_q;
    terms.push_back(t);
    max_term = std::max(max_term, t);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  return max_term + std::log(acc);
}

// P(Binomial(n, prior_success) >= j): the optimal prior success rate of
// recovering at least j of n i.i.d. elements, 1 - delta_o^{j}.
inline double binomial_prior_tail(std::uint64_t j, std::uint64_t n,
                                  double prior_success) {
  if (j >= 1 && j == n) return std::pow(prior_success, static_cast<double>(n));
  const double lt = log_binomial_tail(j, n, prior_success);
  return lt == -kInfiniteDivergence ? 0.0 : std::exp(lt);
}

struct IidIndividualBound {
  double delta_lower = 0.0;    // per-element posterior failure lower bound
  double success_upper = 0.0;  // = 1 - delta_lower
  std::vector<double> per_j_success;  // max posterior success of ">= j of n"
};

// Symmetric-mechanism individual bound: invert the KL budget at each
// "recover at least j of n" binomial prior and average the failure floors.
inline IidIndividualBound iid_individual_bound(std::uint64_t n,
                                               double prior_success,
                                               double v) {
  detail::check_probability(prior_success, "prior_success");
  if (n < 1) throw Error(ErrorCode::kInputConfig, "n must be >= 1");
  if (v < 0.0) throw Error(ErrorCode::kInputConfig, "mi budget must be >= 0");
  IidIndividualBound out;
  out.per_j_success.reserve(n);
  double success_sum = 0.0;
  for (std::uint64_t j = 1; j <= n; ++j) {
    const double log_tail = log_binomial_tail(j, n, prior_success);
    const double sigma_j =
        log_tail == -kInfiniteDivergence
            ? 0.0
            : detail::max_success_rate(log_tail, v);
    out.per_j_success.push_back(sigma_j);
    success_sum += sigma_j;
  }
  out.success_upper = success_sum / static_cast<double>(n);
  out.delta_lower = 1.0 - out.success_upper;
  return out;
}

struct PriorRate {
  double delta_o = 0.0;
};

// Identification prior over a finite candidate set: best a-priori guess is
// the mode, so 1 - delta_o = max_i pmf[i].
inline PriorRate prior_identification(const std::vector<double>& pmf) {
  if (pmf.empty()) throw Error(ErrorCode::kInputConfig, "empty pmf");
  double sum = 0.0;
  double best = 0.0;
  for (double p : pmf) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw Error(ErrorCode::kInputConfig, "pmf entries must be nonnegative");
    }
    sum += p;
    best = std::max(best, p);
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInputConfig, "pmf must sum to 1 within 1e-9");
  }
  return PriorRate{1.0 - best};
}

struct PacBound {
  double delta_o = 0.0;
  double mi_budget_nats = 0.0;
  double delta_lower = 0.0;        // posterior failure lower bound
  double tv_advantage = 0.0;       // min(delta_o, sqrt(v/2))
  double kl_advantage_nats = 0.0;  // the budget itself bounds Delta_KL delta
};

inline PacBound pac_bound(double delta_o, double v) {
  detail::check_probability(delta_o, "delta_o");
  if (v < 0.0) throw Error(ErrorCode::kInputConfig, "mi budget must be >= 0");
  PacBound b;
  b.delta_o = delta_o;
  b.mi_budget_nats = v;
  b.delta_lower = invert_kl_bound(delta_o, v);
  b.tv_advantage = std::min(delta_o, tv_advantage(v));
  b.kl_advantage_nats = v;
  return b;
}

struct PriorSuccessEstimate {
  double frequency = 0.0;
  double half_width = 0.0;  // Hoeffding at 95%
  std::uint64_t trials = 0;
};

// Monte-Carlo lower bound on the optimal prior success for one fixed guess:
// the frequency of rho(guess, X) over fresh datasets. Generator is any
// callable (stream seed) -> dataset; rho is any predicate on the dataset.
template <class GeneratorFn, class PredicateFn>
PriorSuccessEstimate estimate_prior_success(GeneratorFn&& generate,
                                            PredicateFn&& rho,
                                            std::uint64_t trials,
                                            std::uint64_t master_seed,
                                            unsigned workers = 0) {
  if (trials < 1) throw Error(ErrorCode::kInputConfig, "trials must be >= 1");
  std::uint64_t successes = 0;
  ordered_trial_reduce<std::uint64_t>(
      trials, 1024, workers,
      [&](std::uint64_t k, std::uint64_t& acc) {
        const std::uint64_t seed =
            derive_stream_seed(master_seed, k, SeedRole::kData1);
        if (rho(generate(seed))) ++acc;
      },
      std::uint64_t{0},
      [&](std::uint64_t&& acc) { successes += acc; });
  PriorSuccessEstimate est;
  est.trials = trials;
  est.frequency = static_cast<double>(successes) / static_cast<double>(trials);
  est.half_width = std::sqrt(std::log(2.0 / 0.05) /
                             (2.0 * static_cast<double>(trials)));
  return est;
}

}  // namespace pacest::bounds
