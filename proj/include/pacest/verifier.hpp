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
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pacest/certificate.hpp"
#include "pacest/error.hpp"
#include "pacest/linalg.hpp"
#include "pacest/oracle.hpp"
#include "pacest/parallel.hpp"
#include "pacest/rng.hpp"
#include "pacest/subprocess.hpp"

namespace pacest::verify {

struct GaussianComponent {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

// Gaussian mixture with precomputed Cholesky factors for exact log-densities
// and sampling.
class PreparedMixture {
 public:
  PreparedMixture(const std::vector<double>& weights,
                  const std::vector<GaussianComponent>& components) {
    if (weights.size() != components.size() || components.empty()) {
      throw Error(ErrorCode::kInputConfig, "mixture weights/components shape");
    }
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) {
        throw Error(ErrorCode::kInputConfig, "mixture weights must be >= 0");
      }
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw Error(ErrorCode::kInputConfig, "mixture weights must sum to 1");
    }
    const Eigen::Index d = components.front().mean.size();
    comps_.reserve(components.size());
    for (std::size_t i = 0; i < components.size(); ++i) {
      const auto& c = components[i];
      if (c.mean.size() != d || c.covariance.rows() != d ||
          c.covariance.cols() != d) {
        throw Error(ErrorCode::kContractDim, "mixture component shape");
      }
      Eigen::LLT<Eigen::MatrixXd> llt(c.covariance);
      if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::kContractPsd,
                    "singular mixture component covariance (floor violated)");
      }
      Prepared p;
      p.mean = c.mean;
      p.chol_l = llt.matrixL();
      const double logdet =
          2.0 * p.chol_l.diagonal().array().log().sum();
      p.log_norm = -0.5 * (static_cast<double>(d) *
                               std::log(2.0 * std::numbers::pi) +
                           logdet);
      p.log_weight = weights[i] > 0.0
                         ? std::log(weights[i])
                         : -std::numeric_limits<double>::infinity();
      comps_.push_back(std::move(p));
    }
    cum_weights_.reserve(weights.size());
    double acc = 0.0;
    for (double w : weights) {
      acc += w;
      cum_weights_.push_back(acc);
    }
    cum_weights_.back() = 1.0;
  }

  Eigen::Index dim() const { return comps_.front().mean.size(); }

  double log_density(const Eigen::VectorXd& z) const {
    double max_term = -std::numeric_limits<double>::infinity();
    scratch_.resize(comps_.size());
    for (std::size_t i = 0; i < comps_.size(); ++i) {
      const auto& c = comps_[i];
      const Eigen::VectorXd w = c.chol_l.solve(z - c.mean);
      const double term = c.log_weight + c.log_norm - 0.5 * w.squaredNorm();
      scratch_[i] = term;
      max_term = std::max(max_term, term);
    }
    double acc = 0.0;
    for (double t : scratch_) acc += std::exp(t - max_term);
    return max_term + std::log(acc);
  }

  Eigen::VectorXd sample(Rng& rng) const {
    const double u = rng.uniform();
    std::size_t pick = comps_.size() - 1;
    for (std::size_t i = 0; i < cum_weights_.size(); ++i) {
      if (u < cum_weights_[i]) {
        pick = i;
        break;
      }
    }
    const auto& c = comps_[pick];
    Eigen::VectorXd z(dim());
    for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = rng.normal();
    return c.mean + c.chol_l * z;
  }

 private:
  struct Prepared {
    Eigen::VectorXd mean;
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic> chol_l;
    double log_norm = 0.0;
    double log_weight = 0.0;
  };
  std::vector<Prepared> comps_;
  std::vector<double> cum_weights_;
  mutable std::vector<double> scratch_;
};

struct KlEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::uint64_t n_mc = 0;
};

// Monte-Carlo estimator of D_KL(P || Q) between Gaussian mixtures:
// E_{z~P}[ln p(z) - ln q(z)] from n_mc draws, exact mixture log-densities.
inline KlEstimate mixture_kl_estimate(const PreparedMixture& p,
                                      const PreparedMixture& q,
                                      std::uint64_t n_mc, std::uint64_t seed) {
  if (n_mc < 2) throw Error(ErrorCode::kInputConfig, "n_mc must be >= 2");
  if (p.dim() != q.dim()) {
    throw Error(ErrorCode::kContractDim, "mixture dimensions differ");
  }
  Rng rng(seed);
  double mean = 0.0, m2 = 0.0;
  for (std::uint64_t i = 0; i < n_mc; ++i) {
    const Eigen::VectorXd z = p.sample(rng);
    const double x = p.log_density(z) - q.log_density(z);
    const double delta = x - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (x - mean);
  }
  KlEstimate out;
  out.estimate = mean;
  out.n_mc = n_mc;
  const double var = m2 / static_cast<double>(n_mc - 1);
  out.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(n_mc));
  return out;
}

inline KlEstimate mixture_kl_estimate(
    const std::vector<std::pair<double, GaussianComponent>>& p,
    const std::vector<std::pair<double, GaussianComponent>>& q,
    std::uint64_t n_mc, std::uint64_t seed) {
  std::vector<double> wp, wq;
  std::vector<GaussianComponent> cp, cq;
  for (const auto& [w, c] : p) {
    wp.push_back(w);
    cp.push_back(c);
  }
  for (const auto& [w, c] : q) {
    wq.push_back(w);
    cq.push_back(c);
  }
  return mixture_kl_estimate(PreparedMixture(wp, cp), PreparedMixture(wq, cq),
                             n_mc, seed);
}

// ---------------------------------------------------------------------------
// Perturbation proposals

struct GaussianLaw {
  Eigen::VectorXd mean_offset;  // normally zero
  Eigen::MatrixXd covariance;   // PSD
};

class PerturbationProposal {
 public:
  virtual ~PerturbationProposal() = default;
  // Deterministic in (dataset index, seed).
  virtual GaussianLaw law(std::uint64_t index, std::uint64_t theta_seed,
                          Eigen::Index dim) const = 0;
};

class SharedGaussianProposal final : public PerturbationProposal {
 public:
  explicit SharedGaussianProposal(Eigen::MatrixXd covariance)
      : covariance_(std::move(covariance)) {
    require_symmetric(covariance_, "proposal covariance");
  }

  GaussianLaw law(std::uint64_t, std::uint64_t,
                  Eigen::Index dim) const override {
    if (covariance_.rows() != dim) {
      throw Error(ErrorCode::kContractDim, "proposal covariance dimension");
    }
    return {Eigen::VectorXd::Zero(dim), covariance_};
  }

 private:
  Eigen::MatrixXd covariance_;
};

inline std::unique_ptr<SharedGaussianProposal> zero_proposal(Eigen::Index dim) {
  return std::make_unique<SharedGaussianProposal>(
      Eigen::MatrixXd::Zero(dim, dim));
}

// Covariance table keyed by pool index, from JSON:
//   {"0": [[...]], "1": [[...]], ...}  or  {"default": [[...]], "3": ...}
class TableProposal final : public PerturbationProposal {
 public:
  explicit TableProposal(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
      throw Error(ErrorCode::kIo, "cannot open proposal table: " + path);
    }
    nlohmann::json table = nlohmann::json::parse(in, nullptr, false);
    if (table.is_discarded() || !table.is_object()) {
      throw Error(ErrorCode::kInputConfig,
                  "proposal table must be a JSON object");
    }
    for (const auto& [key, value] : table.items()) {
      Eigen::MatrixXd cov = parse_matrix(value);
      require_symmetric(cov, "proposal covariance");
      if (key == "default") {
        default_cov_ = std::move(cov);
      } else {
        by_index_[std::stoull(key)] = std::move(cov);
      }
    }
  }

  GaussianLaw law(std::uint64_t index, std::uint64_t,
                  Eigen::Index dim) const override {
    const auto it = by_index_.find(index);
    const Eigen::MatrixXd* cov = nullptr;
    if (it != by_index_.end()) {
      cov = &it->second;
    } else if (default_cov_) {
      cov = &*default_cov_;
    } else {
      throw Error(ErrorCode::kInputConfig,
                  "proposal table has no entry for pool index " +
                      std::to_string(index));
    }
    if (cov->rows() != dim) {
      throw Error(ErrorCode::kContractDim, "proposal covariance dimension");
    }
    return {Eigen::VectorXd::Zero(dim), *cov};
  }

 private:
  static Eigen::MatrixXd parse_matrix(const nlohmann::json& rows) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]
                        .get<double>();
      }
    }
    return out;
  }

  std::map<std::uint64_t, Eigen::MatrixXd> by_index_;
  std::optional<Eigen::MatrixXd> default_cov_;
};

class SubprocessProposal final : public PerturbationProposal {
 public:
  explicit SubprocessProposal(std::shared_ptr<SubprocessPool> pool)
      : pool_(std::move(pool)) {}
  SubprocessProposal(const std::vector<std::string>& command, unsigned procs)
      : pool_(std::make_shared<SubprocessPool>(command, procs)) {}

  GaussianLaw law(std::uint64_t index, std::uint64_t theta_seed,
                  Eigen::Index dim) const override {
    nlohmann::json req{{"op", "proposal"},
                       {"index", index},
                       {"seed", theta_seed},
                       {"dim", dim}};
    const nlohmann::json reply = pool_->request(req);
    if (!reply.contains("cov")) {
      throw Error(ErrorCode::kOracleSubprocess,
                  "proposal reply missing \"cov\"");
    }
    const auto& rows = reply["cov"];
    if (static_cast<Eigen::Index>(rows.size()) != dim) {
      throw Error(ErrorCode::kContractDim, "proposal covariance dimension");
    }
    Eigen::MatrixXd cov(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      for (Eigen::Index j = 0; j < dim; ++j) {
        cov(i, j) =
            rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]
                .get<double>();
      }
    }
    return {Eigen::VectorXd::Zero(dim), cov};
  }

 private:
  std::shared_ptr<SubprocessPool> pool_;
};

// base proposal plus an independent isotropic top-up N(0, alpha I)
class TopupProposal final : public PerturbationProposal {
 public:
  TopupProposal(const PerturbationProposal& base, double alpha)
      : base_(base), alpha_(alpha) {}

  GaussianLaw law(std::uint64_t index, std::uint64_t theta_seed,
                  Eigen::Index dim) const override {
    GaussianLaw l = base_.law(index, theta_seed, dim);
    l.covariance += alpha_ * Eigen::MatrixXd::Identity(dim, dim);
    return l;
  }

 private:
  const PerturbationProposal& base_;
  double alpha_;
};

// ---------------------------------------------------------------------------
// Algorithm-3 verification

struct VerifyConfig {
  std::uint64_t m = 0;
  std::uint64_t tau1 = 1;  // outer dataset picks per trial (i.i.d.)
  std::uint64_t tau2 = 1;  // reference-mixture dataset subset
  std::uint64_t tau3 = 1;  // seed subset
  double c = 0.0;          // isotropic floor variance for B_c
  double beta = 0.0;       // slack nats
  double gamma = 0.0;
  std::uint64_t n_mc = 0;  // Monte-Carlo draws per KL term
  unsigned workers = 0;

  void validate() const {
    if (m < 1) throw Error(ErrorCode::kInputConfig, "m must be >= 1");
    if (tau1 < 1 || tau2 < 1 || tau3 < 1) {
      throw Error(ErrorCode::kInputConfig, "tau1, tau2, tau3 must be >= 1");
    }
    if (!(c > 0.0)) {
      throw Error(ErrorCode::kInputConfig,
                  "the isotropic floor c must be > 0");
    }
    if (!(beta > 0.0)) throw Error(ErrorCode::kInputConfig, "beta must be > 0");
    if (!(gamma > 0.0 && gamma < 1.0)) {
      throw Error(ErrorCode::kInputConfig, "gamma must lie in (0,1)");
    }
    if (n_mc < 2) throw Error(ErrorCode::kInputConfig, "n_mc must be >= 2");
  }
};

// Theorem-6 sampling requirement.
inline std::uint64_t required_m_verifier(double r, double c, double beta,
                                         double gamma, std::uint64_t tau1) {
  if (!(r > 0.0) || !(c > 0.0) || !(beta > 0.0) ||
      !(gamma > 0.0 && gamma <= 1.0) || tau1 < 1) {
    throw Error(ErrorCode::kInputConfig, "invalid Theorem-6 parameters");
  }
  const double cap = 2.0 * r * r / c;
  const double m = 2.0 * std::log(1.0 / gamma) / (beta * beta) *
                   (cap * cap / static_cast<double>(tau1) + beta / 3.0 * cap);
  return static_cast<std::uint64_t>(std::ceil(m));
}

// N candidate datasets drawn from a generator (the discrete data model the
// verifier works over).
inline std::vector<oracle::Dataset> materialize_pool(
    const oracle::DataOracle& gen, std::uint64_t n,
    std::uint64_t master_seed) {
  std::vector<oracle::Dataset> pool;
  pool.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    pool.push_back(
        gen.generate(derive_stream_seed(master_seed, i, SeedRole::kData1)));
  }
  return pool;
}

struct VerifyResult {
  double psi_bar = 0.0;        // plain mean of the per-trial estimates
  double psi_claimed = 0.0;    // psi_bar + 3 * mc std error (conservative)
  double mc_std_error = 0.0;   // aggregated MC standard error of psi_bar
  MiCertificate certificate;   // claims MI <= psi_claimed + beta
};

// Algorithm 3: per trial, form the per-dataset Gaussian mixtures over a seed
// subset (mechanism output + proposal law + the mandatory B_c floor) and
// average the Monte-Carlo KL estimates of Eq. (15).
inline VerifyResult verify_proposal(const VerifyConfig& cfg,
                                    const PerturbationProposal& proposal,
                                    const oracle::MechanismOracle& mech,
                                    const std::vector<oracle::Dataset>& pool,
                                    std::uint64_t master_seed) {
  cfg.validate();
  const auto n_pool = static_cast<std::uint64_t>(pool.size());
  if (n_pool == 0) {
    throw Error(ErrorCode::kInputConfig, "dataset pool is empty");
  }
  if (cfg.tau2 > n_pool) {
    throw Error(ErrorCode::kInputConfig, "tau2 exceeds the dataset pool size");
  }
  const auto& mspec = mech.spec();
  const Eigen::Index d = mech.output_dim();
  const double r = mech.output_radius();
  const double kl_cap = 2.0 * r * r / cfg.c;
  const Eigen::MatrixXd floor_cov =
      cfg.c * Eigen::MatrixXd::Identity(d, d);

  std::vector<std::string> caveats;
  if (n_pool % cfg.tau2 != 0) {
    caveats.push_back(
        "pool-subsample-hypothesis: tau2 does not divide the pool size N");
  }
  if (!mspec.seed_space_size) {
    if (mspec.randomized) {
      caveats.push_back(
          "iid-seed-approximation: the seed space is unbounded, the "
          "|Theta|/tau3 divisibility hypothesis cannot hold");
    }
  } else if (*mspec.seed_space_size % cfg.tau3 != 0) {
    caveats.push_back(
        "seed-subsample-hypothesis: tau3 does not divide |Theta|");
  }
  const std::uint64_t m_needed =
      required_m_verifier(r, cfg.c, cfg.beta, cfg.gamma, cfg.tau1);
  if (cfg.m < m_needed) {
    caveats.push_back("confidence-unverified: m below the Theorem-6 "
                      "requirement of " +
                      std::to_string(m_needed) + " trials");
  }

  struct TrialAcc {
    double psi_sum = 0.0;
    double se_sq_sum = 0.0;
    std::uint64_t count = 0;
  };

  auto draw_seeds = [&](Rng& rng) {
    if (mspec.seed_space_size) {
      if (cfg.tau3 > *mspec.seed_space_size) {
        throw Error(ErrorCode::kInputConfig,
                    "tau3 exceeds the mechanism's seed space size");
      }
      return rng.subset_without_replacement(*mspec.seed_space_size, cfg.tau3);
    }
    std::vector<std::uint64_t> seeds(cfg.tau3);
    for (auto& s : seeds) s = rng.next_u64();
    return seeds;
  };

  TrialAcc global;
  constexpr std::uint64_t kTrialsPerBlock = 4;
  ordered_trial_reduce<TrialAcc>(
      cfg.m, kTrialsPerBlock, cfg.workers,
      [&](std::uint64_t k, TrialAcc& acc) {
        try {
          Rng sel1(derive_stream_seed(master_seed, k, SeedRole::kData1));
          Rng sel2(derive_stream_seed(master_seed, k, SeedRole::kData2));
          Rng selt(derive_stream_seed(master_seed, k, SeedRole::kSeedSelect));
          Rng mc(derive_stream_seed(master_seed, k, SeedRole::kMcKl));

          std::vector<std::uint64_t> outer(cfg.tau1);
          for (auto& i : outer) i = sel1.uniform_index(n_pool);
          const auto reference =
              sel2.subset_without_replacement(n_pool, cfg.tau2);
          const auto seeds = draw_seeds(selt);

          auto components_for = [&](std::uint64_t index) {
            std::vector<GaussianComponent> comps;
            comps.reserve(cfg.tau3);
            for (const auto s : seeds) {
              const auto y = mech.evaluate(pool[index], s);
              GaussianLaw law = proposal.law(index, s, d);
              GaussianComponent comp;
              comp.mean = y.values + law.mean_offset;
              comp.covariance = law.covariance + floor_cov;
              comps.push_back(std::move(comp));
            }
            return comps;
          };

          // reference mixture Q over tau2 * tau3 components
          std::vector<double> qw;
          std::vector<GaussianComponent> qc;
          for (const auto l : reference) {
            auto comps = components_for(l);
            for (auto& comp : comps) {
              qw.push_back(1.0 / static_cast<double>(cfg.tau2 * cfg.tau3));
              qc.push_back(std::move(comp));
            }
          }
          const PreparedMixture q(qw, qc);

          double psi_k = 0.0;
          double se_sq_k = 0.0;
          const std::vector<double> pw(
              cfg.tau3, 1.0 / static_cast<double>(cfg.tau3));
          for (const auto i : outer) {
            const PreparedMixture p(pw, components_for(i));
            const auto kl = mixture_kl_estimate(p, q, cfg.n_mc, mc.next_u64());
            if (kl.estimate > kl_cap + 5.0 * kl.std_error + 1e-9) {
              throw Error(ErrorCode::kContractPsd,
                          "KL estimate exceeds the 2r^2/c cap; the B_c floor "
                          "contract is broken");
            }
            psi_k += kl.estimate;
            se_sq_k += kl.std_error * kl.std_error;
          }
          psi_k /= static_cast<double>(cfg.tau1);
          se_sq_k /= static_cast<double>(cfg.tau1) * static_cast<double>(cfg.tau1);

          acc.psi_sum += psi_k;
          acc.se_sq_sum += se_sq_k;
          acc.count += 1;
        } catch (const Error& e) {
          throw e.with_trial(k);
        }
      },
      TrialAcc{},
      [&](TrialAcc&& acc) {
        global.psi_sum += acc.psi_sum;
        global.se_sq_sum += acc.se_sq_sum;
        global.count += acc.count;
      });

  VerifyResult out;
  const double md = static_cast<double>(global.count);
  out.psi_bar = global.psi_sum / md;
  out.mc_std_error = std::sqrt(global.se_sq_sum) / md;
  out.psi_claimed = out.psi_bar + 3.0 * out.mc_std_error;

  MiCertificate cert;
  cert.method = CertificateMethod::kVerified;
  cert.v_claimed = out.psi_claimed + cfg.beta;
  cert.confidence = 1.0 - cfg.gamma;
  cert.m_used = cfg.m;
  cert.c = cfg.c;
  cert.diagnostics.psi_bar = out.psi_bar;
  cert.diagnostics.psi_bar_std_error = out.mc_std_error;
  cert.diagnostics.noise_trace = 0.0;
  cert.diagnostics.noise_magnitude = 0.0;
  cert.caveats = std::move(caveats);
  cert.notes.push_back(
      "claimed psi folds in 3x the Monte-Carlo standard error");
  out.certificate = std::move(cert);
  return out;
}

struct TopupResult {
  double alpha = 0.0;
  VerifyResult at_alpha;
  // bisection trace: (alpha, psi_bar, mc_std_error)
  std::vector<std::array<double, 3>> trace;
};

// Propose-then-verify step 2: smallest isotropic top-up alpha in
// [alpha_lo, alpha_hi] whose verification meets target_v, by bisection to
// 1e-2 relative tolerance on alpha. Each probe is a fresh verification run
// on probe-derived seeds.
inline TopupResult calibrate_topup(const PerturbationProposal& proposal,
                                   double target_v,
                                   const oracle::MechanismOracle& mech,
                                   const std::vector<oracle::Dataset>& pool,
                                   const VerifyConfig& cfg, double alpha_lo,
                                   double alpha_hi,
                                   std::uint64_t master_seed) {
  if (!(alpha_lo >= 0.0) || !(alpha_hi > alpha_lo)) {
    throw Error(ErrorCode::kInputConfig, "need 0 <= alpha_lo < alpha_hi");
  }
  TopupResult out;
  std::uint64_t probe_counter = 0;
  auto probe = [&](double alpha) {
    const TopupProposal topped(proposal, alpha);
    const std::uint64_t probe_seed =
        derive_stream_seed(master_seed, probe_counter++, SeedRole::kMcKl);
    VerifyResult res = verify_proposal(cfg, topped, mech, pool, probe_seed);
    out.trace.push_back({alpha, res.psi_bar, res.mc_std_error});
    return res;
  };
  auto verifies = [&](const VerifyResult& res) {
    return res.psi_claimed + cfg.beta <= target_v;
  };

  VerifyResult hi_res = probe(alpha_hi);
  if (!verifies(hi_res)) {
    throw Error(ErrorCode::kCalibrationRange,
                "alpha range upper end does not verify at the target budget");
  }
  VerifyResult lo_res = probe(alpha_lo);
  if (verifies(lo_res)) {
    out.alpha = alpha_lo;
    out.at_alpha = std::move(lo_res);
  } else {
    double lo = alpha_lo, hi = alpha_hi;
    VerifyResult best = std::move(hi_res);
    while (hi - lo > 1e-2 * hi) {
      const double mid = 0.5 * (lo + hi);
      VerifyResult mid_res = probe(mid);
      if (verifies(mid_res)) {
        hi = mid;
        best = std::move(mid_res);
      } else {
        lo = mid;
      }
    }
    out.alpha = hi;
    out.at_alpha = std::move(best);
  }

  // sanity: larger noise cannot increase the estimated divergence beyond MC
  // error (3-SE slack)
  auto sorted = out.trace;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a[0] < b[0]; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const auto& prev = sorted[i - 1];
    const auto& cur = sorted[i];
    if (cur[1] > prev[1] + 3.0 * (prev[2] + cur[2]) + 1e-9) {
      throw Error(ErrorCode::kCalibrationRange,
                  "psi estimates are not monotone in alpha beyond MC error");
    }
  }
  return out;
}

}  // namespace pacest::verify
