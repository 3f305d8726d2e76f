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
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "pacest/certificate.hpp"
#include "pacest/error.hpp"
#include "pacest/linalg.hpp"
#include "pacest/noise.hpp"
#include "pacest/oracle.hpp"
#include "pacest/parallel.hpp"
#include "pacest/rng.hpp"

namespace pacest::det {

struct DetAnalysisConfig {
  std::uint64_t m = 0;  // simulation trials, >= 2
  double v = 0.0;       // target MI budget share (nats)
  double beta = 0.0;    // estimation slack share (nats)
  double c = 0.0;       // safety floor on eigenvalue estimates
  double gamma = 0.0;   // confidence tail
  double kappa = 1.0;   // stand-in for the universal constant
  unsigned workers = 0;

  void validate() const {
    if (m < 2) throw Error(ErrorCode::kInputConfig, "m must be >= 2");
    if (!(v > 0.0)) throw Error(ErrorCode::kInputConfig, "v must be > 0");
    if (!(beta > 0.0)) throw Error(ErrorCode::kInputConfig, "beta must be > 0");
    if (!(c > 0.0)) throw Error(ErrorCode::kInputConfig, "c must be > 0");
    if (!(gamma > 0.0 && gamma < 1.0)) {
      throw Error(ErrorCode::kInputConfig, "gamma must lie in (0,1)");
    }
    if (!(kappa > 0.0)) throw Error(ErrorCode::kInputConfig, "kappa must be > 0");
  }
};

// Streaming mean/covariance accumulator with a Chan-style merge, so trials
// stream in O(d^2) memory and block merges in fixed order reproduce the
// same result for any worker count.
class CovarianceAccumulator {
 public:
  CovarianceAccumulator() = default;
  explicit CovarianceAccumulator(Eigen::Index dim)
      : mean_(Eigen::VectorXd::Zero(dim)),
        m2_(Eigen::MatrixXd::Zero(dim, dim)) {}

  void add(const Eigen::VectorXd& y) {
    if (count_ == 0 && mean_.size() == 0) {
      mean_ = Eigen::VectorXd::Zero(y.size());
      m2_ = Eigen::MatrixXd::Zero(y.size(), y.size());
    }
    if (y.size() != mean_.size()) {
      throw Error(ErrorCode::kContractDim, "sample dimension mismatch");
    }
    ++count_;
    const Eigen::VectorXd delta = y - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_.noalias() += delta * (y - mean_).transpose();
  }

  void merge(const CovarianceAccumulator& other) {
    if (other.count_ == 0) return;
    if (count_ == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(other.count_);
    const Eigen::VectorXd delta = other.mean_ - mean_;
    m2_ += other.m2_ + (na * nb / (na + nb)) * (delta * delta.transpose());
    mean_ += (nb / (na + nb)) * delta;
    count_ += other.count_;
  }

  std::uint64_t count() const { return count_; }
  const Eigen::VectorXd& mean() const { return mean_; }

  // Empirical covariance with divisor m (not m-1), symmetrized.
  Eigen::MatrixXd covariance() const {
    if (count_ < 1) {
      throw Error(ErrorCode::kInputConfig, "no samples accumulated");
    }
    Eigen::MatrixXd sigma = m2_ / static_cast<double>(count_);
    return 0.5 * (sigma + sigma.transpose());
  }

 private:
  std::uint64_t count_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd m2_;
};

inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> estimate_covariance(
    const std::vector<oracle::OutputSample>& samples) {
  if (samples.size() < 2) {
    throw Error(ErrorCode::kInputConfig, "need at least 2 samples");
  }
  CovarianceAccumulator acc(samples.front().values.size());
  for (const auto& s : samples) acc.add(s.values);
  return {acc.mean(), acc.covariance()};
}

struct SpectralDecomposition {
  Eigen::MatrixXd basis;     // U-hat, columns
  Eigen::VectorXd values;    // non-increasing, clamped at 0
};

inline SpectralDecomposition spectral_decompose(const Eigen::MatrixXd& sigma) {
  const auto eig = sym_eigh_descending(sigma);
  const Eigen::MatrixXd recon =
      eig.vectors * eig.values.asDiagonal() * eig.vectors.transpose();
  const double scale = std::max(1.0, sigma.norm());
  if ((sigma - recon).norm() > 1e-8 * scale) {
    throw Error(ErrorCode::kContractPsd, "spectral reconstruction failed");
  }
  return {eig.vectors, eig.values};
}

// Line-9 gap test. j0 indexes the significant eigenvalues (> c); with no
// significant eigenvalue the condition is vacuously true.
inline bool eigen_gap_branch(const Eigen::VectorXd& values, double c, double r,
                             Eigen::Index d) {
  Eigen::Index j0 = 0;
  for (Eigen::Index j = 0; j < values.size(); ++j) {
    if (values[j] > c) j0 = j + 1;
  }
  if (j0 == 0) return true;
  double min_gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < j0; ++j) {
    for (Eigen::Index l = 0; l < values.size(); ++l) {
      if (l == j) continue;
      min_gap = std::min(min_gap, std::abs(values[j] - values[l]));
    }
  }
  return min_gap > r * std::sqrt(static_cast<double>(d) * c) + 2.0 * c;
}

// Eq.-(7) noise: precision lambda_{B,j} = 2v / (sqrt(lhat_j + 10cv/beta) *
// sum_l sqrt(lhat_l + 10cv/beta)); the NoiseSpec carries the reciprocals as
// variances in the estimated eigenbasis.
inline NoiseSpec anisotropic_noise(const Eigen::VectorXd& values,
                                   const Eigen::MatrixXd& basis, double v,
                                   double beta, double c) {
  const Eigen::Index d = values.size();
  const double inflation = beta > 0.0 ? 10.0 * c * v / beta : 0.0;
  Eigen::VectorXd inflated = values.array().max(0.0) + inflation;
  const double root_sum = inflated.cwiseSqrt().sum();
  Eigen::VectorXd variances(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    variances[j] = std::sqrt(inflated[j]) * root_sum / (2.0 * v);
  }
  NoiseSpec spec;
  spec.dim = d;
  spec.law = AnisotropicNoise{basis, std::move(variances)};
  return spec;
}

inline NoiseSpec isotropic_fallback(const Eigen::VectorXd& values, double v,
                                    double c, Eigen::Index d) {
  const double sigma2 =
      (values.array().max(0.0).sum() + static_cast<double>(d) * c) / (2.0 * v);
  return isotropic_noise_spec(d, sigma2);
}

// Eq.-(8) tradeoff between the safety floor c, trials m and tail gamma.
inline bool confidence_check(double c, std::uint64_t m, double gamma,
                             Eigen::Index d, double r, double kappa) {
  if (!(c > 0.0)) return false;
  const double md = static_cast<double>(m);
  const double dd = static_cast<double>(d);
  const double t = (dd + std::log(4.0 / gamma)) / md;
  const double rhs =
      kappa * r *
      (std::max(std::sqrt(t), t) + std::sqrt(dd * std::log(4.0 / gamma) / md));
  return c >= rhs;
}

// (1/2) log det(I + Sigma_hat Sigma_B^{-1}), the Eq.-(6) bound evaluated at
// an emitted noise spec.
inline double mi_upper_bound(const Eigen::MatrixXd& sigma_hat,
                             const NoiseSpec& noise) {
  require_symmetric(sigma_hat, "covariance");
  if (sigma_hat.rows() != noise.dim) {
    throw Error(ErrorCode::kContractDim, "covariance/noise dimension mismatch");
  }
  const Eigen::MatrixXd b = noise.covariance();
  Eigen::LLT<Eigen::MatrixXd> llt(b);
  if (llt.info() != Eigen::Success) {
    // Singular noise leaks infinitely in any direction with signal.
    return sigma_hat.norm() == 0.0 ? 0.0
                                   : std::numeric_limits<double>::infinity();
  }
  const Eigen::MatrixXd li = llt.matrixL().solve(
      Eigen::MatrixXd::Identity(noise.dim, noise.dim));
  const Eigen::MatrixXd whitened = li * sigma_hat * li.transpose();
  const auto eig = sym_eigh_descending(0.5 * (whitened + whitened.transpose()));
  double total = 0.0;
  for (Eigen::Index j = 0; j < eig.values.size(); ++j) {
    total += std::log1p(eig.values[j]);
  }
  return 0.5 * total;
}

struct DetAnalysisResult {
  NoiseSpec noise;
  MiCertificate certificate;
  Eigen::VectorXd mean;
  Eigen::MatrixXd sigma_hat;
};

// Algorithm-1 end-to-end: m generate->evaluate trials, covariance SVD,
// eigen-gap branch, noise emission, certificate MI <= v + beta.
inline DetAnalysisResult analyze_deterministic(const DetAnalysisConfig& cfg,
                                               const oracle::MechanismOracle& mech,
                                               const oracle::DataOracle& gen,
                                               std::uint64_t master_seed) {
  cfg.validate();
  if (mech.spec().randomized) {
    throw Error(ErrorCode::kInputConfig,
                "analyze_deterministic requires a deterministic mechanism");
  }
  const Eigen::Index d = mech.output_dim();
  const double r = mech.output_radius();

  CovarianceAccumulator global(d);
  constexpr std::uint64_t kTrialsPerBlock = 256;
  ordered_trial_reduce<CovarianceAccumulator>(
      cfg.m, kTrialsPerBlock, cfg.workers,
      [&](std::uint64_t k, CovarianceAccumulator& acc) {
        try {
          const auto dataset = gen.generate(
              derive_stream_seed(master_seed, k, SeedRole::kData1));
          acc.add(mech.evaluate(dataset,
                                derive_stream_seed(master_seed, k,
                                                   SeedRole::kSeedSelect))
                      .values);
        } catch (const Error& e) {
          throw e.with_trial(k);
        }
      },
      CovarianceAccumulator(d),
      [&](CovarianceAccumulator&& acc) { global.merge(acc); });

  DetAnalysisResult out;
  out.mean = global.mean();
  out.sigma_hat = global.covariance();
  const auto spectral = spectral_decompose(out.sigma_hat);
  const bool gap = eigen_gap_branch(spectral.values, cfg.c, r, d);
  out.noise = gap ? anisotropic_noise(spectral.values, spectral.basis, cfg.v,
                                      cfg.beta, cfg.c)
                  : isotropic_fallback(spectral.values, cfg.v, cfg.c, d);

  MiCertificate cert;
  cert.method = CertificateMethod::kDeterministicCov;
  cert.v_claimed = cfg.v + cfg.beta;
  cert.confidence = 1.0 - cfg.gamma;
  cert.m_used = cfg.m;
  cert.c = cfg.c;
  cert.diagnostics.eigenvalues.assign(
      spectral.values.data(), spectral.values.data() + spectral.values.size());
  cert.diagnostics.eigen_gap_branch = gap;
  cert.diagnostics.noise_trace = out.noise.trace();
  cert.diagnostics.noise_magnitude = out.noise.magnitude();
  cert.diagnostics.kappa = cfg.kappa;
  cert.diagnostics.confidence_check_passed =
      confidence_check(cfg.c, cfg.m, cfg.gamma, d, r, cfg.kappa);
  cert.notes.push_back(
      "confidence is conditional on the universal constant kappa; checked "
      "with kappa=" +
      std::to_string(cfg.kappa));
  if (!cert.diagnostics.confidence_check_passed) {
    cert.caveats.push_back(
        "confidence-unverified: c is below the Theorem-4 threshold for the "
        "configured kappa, m and gamma");
  }
  out.certificate = std::move(cert);
  return out;
}

}  // namespace pacest::det
