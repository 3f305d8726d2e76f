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

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "pacest/assignment.hpp"
#include "pacest/certificate.hpp"
#include "pacest/error.hpp"
#include "pacest/noise.hpp"
#include "pacest/oracle.hpp"
#include "pacest/parallel.hpp"
#include "pacest/rng.hpp"

namespace pacest::rand {

struct BlockVector {
  std::vector<Eigen::VectorXd> blocks;

  void validate() const {
    if (blocks.empty()) {
      throw Error(ErrorCode::kContractDim, "block vector must be nonempty");
    }
    for (const auto& b : blocks) {
      if (b.size() != blocks.front().size()) {
        throw Error(ErrorCode::kContractDim, "block dimensions must agree");
      }
    }
  }
};

struct MinPermutationResult {
  double value = 0.0;                      // min over pi of mean sq distance
  std::vector<Eigen::Index> permutation;   // attaining pi, a(j) <-> b(pi(j))
};

// Minimal-permutation distance between two tau-block vectors: the assignment
// problem on squared-distance costs, solved exactly.
inline MinPermutationResult min_permutation_distance(const BlockVector& a,
                                                     const BlockVector& b) {
  a.validate();
  b.validate();
  if (a.blocks.size() != b.blocks.size() ||
      a.blocks.front().size() != b.blocks.front().size()) {
    throw Error(ErrorCode::kContractDim, "block vectors must have equal shape");
  }
  const auto tau = static_cast<Eigen::Index>(a.blocks.size());
  Eigen::MatrixXd cost(tau, tau);
  for (Eigen::Index i = 0; i < tau; ++i) {
    for (Eigen::Index j = 0; j < tau; ++j) {
      cost(i, j) = (a.blocks[static_cast<std::size_t>(i)] -
                    b.blocks[static_cast<std::size_t>(j)])
                       .squaredNorm();
    }
  }
  auto [total, perm] = solve_assignment(cost);
  return {total / static_cast<double>(tau), std::move(perm)};
}

// Theorem-5 sampling requirement: m >= 8 r^4 ln(1/gamma) / c^2.
inline std::uint64_t required_m_randomized(double r, double c, double gamma) {
  if (!(r > 0.0) || !(c > 0.0) || !(gamma > 0.0 && gamma <= 1.0)) {
    throw Error(ErrorCode::kInputConfig, "require r, c > 0 and gamma in (0,1]");
  }
  const double m = 8.0 * std::pow(r, 4) * std::log(1.0 / gamma) / (c * c);
  return static_cast<std::uint64_t>(std::ceil(m));
}

struct RandAnalysisConfig {
  std::uint64_t m = 0;
  std::uint64_t tau = 1;
  double v = 0.0;
  double c = 0.0;      // squared-output units
  double gamma = 0.0;
  unsigned workers = 0;

  void validate() const {
    if (m < 1) throw Error(ErrorCode::kInputConfig, "m must be >= 1");
    if (tau < 1) throw Error(ErrorCode::kInputConfig, "tau must be >= 1");
    if (!(v > 0.0)) throw Error(ErrorCode::kInputConfig, "v must be > 0");
    if (!(c > 0.0)) throw Error(ErrorCode::kInputConfig, "c must be > 0");
    if (!(gamma > 0.0 && gamma < 1.0)) {
      throw Error(ErrorCode::kInputConfig, "gamma must lie in (0,1)");
    }
  }
};

struct RandAnalysisResult {
  NoiseSpec noise;
  MiCertificate certificate;
  double psi_bar = 0.0;
};

namespace detail {

// tau evaluation seeds for one trial: a uniform tau-subset of a finite seed
// space, or i.i.d. raw seeds when the space is unbounded.
inline std::vector<std::uint64_t> draw_trial_seeds(
    const oracle::MechanismSpec& mspec, std::uint64_t tau, Rng& rng) {
  if (mspec.seed_space_size) {
    const std::uint64_t size = *mspec.seed_space_size;
    if (tau > size) {
      throw Error(ErrorCode::kInputConfig,
                  "tau exceeds the mechanism's seed space size");
    }
    return rng.subset_without_replacement(size, tau);
  }
  std::vector<std::uint64_t> seeds(tau);
  for (auto& s : seeds) s = rng.next_u64();
  return seeds;
}

struct KahanMean {
  double sum = 0.0;
  double comp = 0.0;
  std::uint64_t count = 0;

  void add(double x) {
    ++count;
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }

  void merge(const KahanMean& other) {
    // fixed merge order makes this deterministic for any worker count
    const double y = other.sum - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
    count += other.count;
  }

  double mean() const { return count == 0 ? 0.0 : sum / static_cast<double>(count); }
};

}  // namespace detail

// Algorithm-2 analysis: per trial, two independent datasets share tau
// evaluation seeds; the minimal-permutation distance between the two output
// block vectors estimates the divergence scale, and the emitted isotropic
// noise is (psi_bar + c) / (2v) * I.
inline RandAnalysisResult analyze_randomized(const RandAnalysisConfig& cfg,
                                             const oracle::MechanismOracle& mech,
                                             const oracle::DataOracle& gen,
                                             std::uint64_t master_seed) {
  cfg.validate();
  const auto& mspec = mech.spec();
  const double r = mech.output_radius();
  const double psi_cap = 4.0 * r * r;

  std::vector<std::string> caveats;
  std::vector<std::string> notes;
  if (!mspec.seed_space_size) {
    caveats.push_back(
        "iid-seed-approximation: the seed space is unbounded, the "
        "|Theta|/tau divisibility hypothesis cannot hold");
  } else if (*mspec.seed_space_size % cfg.tau != 0) {
    caveats.push_back(
        "seed-subsample-hypothesis: tau does not divide |Theta|, the "
        "Theorem-5 hypothesis is not met");
  }
  if (cfg.c > psi_cap) {
    notes.push_back("c exceeds 4r^2; the emitted noise is vacuously large");
  }
  const std::uint64_t m_needed = required_m_randomized(r, cfg.c, cfg.gamma);
  if (cfg.m < m_needed) {
    caveats.push_back("confidence-unverified: m below the Theorem-5 "
                      "requirement of " +
                      std::to_string(m_needed) + " trials");
  }

  detail::KahanMean psi_acc;
  constexpr std::uint64_t kTrialsPerBlock = 16;
  ordered_trial_reduce<detail::KahanMean>(
      cfg.m, kTrialsPerBlock, cfg.workers,
      [&](std::uint64_t k, detail::KahanMean& acc) {
        try {
          const auto ds1 = gen.generate(
              derive_stream_seed(master_seed, k, SeedRole::kData1));
          const auto ds2 = gen.generate(
              derive_stream_seed(master_seed, k, SeedRole::kData2));
          Rng sel(derive_stream_seed(master_seed, k, SeedRole::kSeedSelect));
          const auto seeds = detail::draw_trial_seeds(mspec, cfg.tau, sel);
          BlockVector y1, y2;
          y1.blocks.reserve(cfg.tau);
          y2.blocks.reserve(cfg.tau);
          for (const auto s : seeds) {
            y1.blocks.push_back(mech.evaluate(ds1, s).values);
            y2.blocks.push_back(mech.evaluate(ds2, s).values);
          }
          const double psi = min_permutation_distance(y1, y2).value;
          if (psi > psi_cap * (1.0 + 1e-9)) {
            throw Error(ErrorCode::kContractRadius,
                        "permutation distance exceeds 4r^2");
          }
          acc.add(psi);
        } catch (const Error& e) {
          throw e.with_trial(k);
        }
      },
      detail::KahanMean{},
      [&](detail::KahanMean&& acc) { psi_acc.merge(acc); });

  RandAnalysisResult out;
  out.psi_bar = psi_acc.mean();
  const double sigma2 = (out.psi_bar + cfg.c) / (2.0 * cfg.v);
  out.noise = isotropic_noise_spec(mech.output_dim(), sigma2);

  MiCertificate cert;
  cert.method = CertificateMethod::kRandomizedDist;
  cert.v_claimed = cfg.v;
  cert.confidence = 1.0 - cfg.gamma;
  cert.m_used = cfg.m;
  cert.c = cfg.c;
  cert.diagnostics.psi_bar = out.psi_bar;
  cert.diagnostics.noise_trace = out.noise.trace();
  cert.diagnostics.noise_magnitude = out.noise.magnitude();
  cert.caveats = std::move(caveats);
  cert.notes = std::move(notes);
  out.certificate = std::move(cert);
  return out;
}

// psi_bar as a function of tau, for the sweep report.
inline std::vector<std::pair<std::uint64_t, double>> psi_bar_tau_sweep(
    RandAnalysisConfig cfg, const std::vector<std::uint64_t>& taus,
    const oracle::MechanismOracle& mech, const oracle::DataOracle& gen,
    std::uint64_t master_seed) {
  std::vector<std::pair<std::uint64_t, double>> out;
  out.reserve(taus.size());
  for (const auto tau : taus) {
    cfg.tau = tau;
    out.emplace_back(tau,
                     analyze_randomized(cfg, mech, gen, master_seed).psi_bar);
  }
  return out;
}

}  // namespace pacest::rand
