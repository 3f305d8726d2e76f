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
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pacest/error.hpp"
#include "pacest/linalg.hpp"
#include "pacest/rng.hpp"
#include "pacest/subprocess.hpp"

namespace pacest::oracle {

// Datasets are row matrices: one datapoint per row.
using Dataset = Eigen::MatrixXd;

struct OutputSample {
  Eigen::VectorXd values;
};

// ---------------------------------------------------------------------------
// Generator specs

struct PoissonScheme {
  double p = 1.0;  // independent per-row inclusion probability, (0, 1]
};

struct WithoutReplacementScheme {
  std::uint64_t k = 0;
};

struct FullScheme {};

using SamplingScheme =
    std::variant<PoissonScheme, WithoutReplacementScheme, FullScheme>;

struct PoolSamplerSpec {
  std::string source;  // CSV path, rows = datapoints
  bool has_header = false;
  SamplingScheme scheme = FullScheme{};
};

struct ParametricGaussianSpec {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // symmetric PSD within 1e-9
  std::uint64_t rows = 1;      // i.i.d. rows per dataset
};

struct SubprocessGeneratorSpec {
  std::vector<std::string> command;
};

using GeneratorSpec =
    std::variant<PoolSamplerSpec, ParametricGaussianSpec,
                 SubprocessGeneratorSpec>;

// ---------------------------------------------------------------------------
// CSV pool

// Strict CSV of finite doubles, all rows equal width. Header optional.
inline Eigen::MatrixXd load_csv_pool(const std::string& path,
                                     bool has_header) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kInputPool, "cannot open pool file: " + path);
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && has_header) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::size_t end = comma == std::string::npos ? line.size() : comma;
      std::size_t a = start, b = end;
      while (a < b && (line[a] == ' ' || line[a] == '\t')) ++a;
      while (b > a && (line[b - 1] == ' ' || line[b - 1] == '\t')) --b;
      double value = 0.0;
      const auto res = std::from_chars(line.data() + a, line.data() + b, value);
      if (res.ec != std::errc{} || res.ptr != line.data() + b) {
        throw Error(ErrorCode::kInputPool,
                    "unparseable number at " + path + ":" +
                        std::to_string(lineno));
      }
      if (!std::isfinite(value)) {
        throw Error(ErrorCode::kInputPool,
                    "non-finite value at " + path + ":" +
                        std::to_string(lineno));
      }
      row.push_back(value);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::kInputPool,
                  "ragged row at " + path + ":" + std::to_string(lineno));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw Error(ErrorCode::kInputPool, "pool file has no data rows: " + path);
  }
  Eigen::MatrixXd pool(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < pool.rows(); ++i) {
    for (Eigen::Index j = 0; j < pool.cols(); ++j) {
      pool(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return pool;
}

// ---------------------------------------------------------------------------
// Data oracles

class DataOracle {
 public:
  virtual ~DataOracle() = default;
  // Deterministic in the stream seed; safe for concurrent callers.
  virtual Dataset generate(std::uint64_t stream_seed) const = 0;
};

class PoolSampler final : public DataOracle {
 public:
  PoolSampler(PoolSamplerSpec spec)
      : spec_(std::move(spec)), pool_(load_csv_pool(spec_.source, spec_.has_header)) {
    validate();
  }

  // Pool supplied directly (tests, verifier materialization).
  PoolSampler(Eigen::MatrixXd pool, SamplingScheme scheme)
      : pool_(std::move(pool)) {
    spec_.scheme = scheme;
    validate();
  }

  Dataset generate(std::uint64_t stream_seed) const override {
    Rng rng(stream_seed);
    const auto n = static_cast<std::uint64_t>(pool_.rows());
    if (const auto* poisson = std::get_if<PoissonScheme>(&spec_.scheme)) {
      std::vector<Eigen::Index> take;
      take.reserve(static_cast<std::size_t>(static_cast<double>(n) * poisson->p * 1.2) + 8);
      for (std::uint64_t i = 0; i < n; ++i) {
        if (rng.bernoulli(poisson->p)) take.push_back(static_cast<Eigen::Index>(i));
      }
      return pool_(take, Eigen::all);
    }
    if (const auto* wr = std::get_if<WithoutReplacementScheme>(&spec_.scheme)) {
      const auto idx = rng.subset_without_replacement(n, wr->k);
      std::vector<Eigen::Index> take(idx.begin(), idx.end());
      return pool_(take, Eigen::all);
    }
    return pool_;
  }

  const Eigen::MatrixXd& pool() const { return pool_; }

 private:
  void validate() const {
    if (const auto* poisson = std::get_if<PoissonScheme>(&spec_.scheme)) {
      if (!(poisson->p > 0.0 && poisson->p <= 1.0)) {
        throw Error(ErrorCode::kInputConfig, "poisson p must be in (0,1]");
      }
    }
    if (const auto* wr = std::get_if<WithoutReplacementScheme>(&spec_.scheme)) {
      if (wr->k > static_cast<std::uint64_t>(pool_.rows())) {
        throw Error(ErrorCode::kInputConfig,
                    "without-replacement k exceeds pool size");
      }
    }
  }

  PoolSamplerSpec spec_;
  Eigen::MatrixXd pool_;
};

class ParametricGaussian final : public DataOracle {
 public:
  explicit ParametricGaussian(ParametricGaussianSpec spec)
      : spec_(std::move(spec)) {
    if (spec_.covariance.rows() != spec_.mean.size() ||
        spec_.covariance.cols() != spec_.mean.size()) {
      throw Error(ErrorCode::kContractDim, "mean/covariance shape mismatch");
    }
    require_symmetric(spec_.covariance, "generator covariance");
    factor_ = psd_sqrt(spec_.covariance);
    if (spec_.rows < 1) {
      throw Error(ErrorCode::kInputConfig, "gaussian rows must be >= 1");
    }
  }

  Dataset generate(std::uint64_t stream_seed) const override {
    Rng rng(stream_seed);
    const Eigen::Index d = spec_.mean.size();
    Dataset out(static_cast<Eigen::Index>(spec_.rows), d);
    Eigen::VectorXd z(d);
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      for (Eigen::Index j = 0; j < d; ++j) z[j] = rng.normal();
      out.row(r) = (spec_.mean + factor_ * z).transpose();
    }
    return out;
  }

 private:
  ParametricGaussianSpec spec_;
  Eigen::MatrixXd factor_;
};

namespace detail {

inline Eigen::MatrixXd rows_from_json(const nlohmann::json& rows) {
  if (!rows.is_array()) {
    throw Error(ErrorCode::kOracleSubprocess, "\"rows\" must be an array");
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n == 0) return Eigen::MatrixXd(0, 0);
  const auto width = static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd out(n, width);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != width) {
      throw Error(ErrorCode::kOracleSubprocess, "ragged \"rows\" reply");
    }
    for (Eigen::Index j = 0; j < width; ++j) {
      out(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
  }
  return out;
}

inline nlohmann::json rows_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

class SubprocessGenerator final : public DataOracle {
 public:
  SubprocessGenerator(SubprocessGeneratorSpec spec, unsigned procs)
      : pool_(std::make_shared<SubprocessPool>(spec.command, procs)) {}

  explicit SubprocessGenerator(std::shared_ptr<SubprocessPool> pool)
      : pool_(std::move(pool)) {}

  Dataset generate(std::uint64_t stream_seed) const override {
    nlohmann::json req{{"op", "generate"}, {"seed", stream_seed}};
    const nlohmann::json reply = pool_->request(req);
    if (!reply.contains("rows")) {
      throw Error(ErrorCode::kOracleSubprocess,
                  "generate reply missing \"rows\"");
    }
    return detail::rows_from_json(reply["rows"]);
  }

 private:
  std::shared_ptr<SubprocessPool> pool_;
};

inline std::unique_ptr<DataOracle> make_data_oracle(const GeneratorSpec& spec,
                                                    unsigned procs = 1) {
  if (const auto* p = std::get_if<PoolSamplerSpec>(&spec)) {
    return std::make_unique<PoolSampler>(*p);
  }
  if (const auto* g = std::get_if<ParametricGaussianSpec>(&spec)) {
    return std::make_unique<ParametricGaussian>(*g);
  }
  return std::make_unique<SubprocessGenerator>(
      std::get<SubprocessGeneratorSpec>(spec), procs);
}

// ---------------------------------------------------------------------------
// Mechanism oracles

enum class MechanismKind {
  kBuiltinMean,
  kBuiltinSum,
  kBuiltinIdentity,
  kSubprocess,
};

struct MechanismSpec {
  MechanismKind kind = MechanismKind::kBuiltinMean;
  bool randomized = false;
  // |Theta|; nullopt declares an unbounded/continuous seed space.
  std::optional<std::uint64_t> seed_space_size;
  Eigen::Index output_dim = 0;   // d
  double output_radius = 0.0;    // r, hard l2 bound on outputs
  std::vector<std::string> command;  // subprocess only
};

// State visible to adaptively-composed mechanisms (ledger rounds).
struct EvalContext {
  const std::vector<std::uint64_t>* joint_seed = nullptr;
  const std::vector<Eigen::VectorXd>* history = nullptr;
};

class MechanismOracle {
 public:
  explicit MechanismOracle(MechanismSpec spec) : spec_(std::move(spec)) {
    if (spec_.output_dim <= 0) {
      throw Error(ErrorCode::kInputConfig, "output_dim must be positive");
    }
    if (!(spec_.output_radius > 0.0)) {
      throw Error(ErrorCode::kInputConfig, "output_radius must be positive");
    }
  }
  virtual ~MechanismOracle() = default;

  const MechanismSpec& spec() const { return spec_; }
  Eigen::Index output_dim() const { return spec_.output_dim; }
  double output_radius() const { return spec_.output_radius; }

  OutputSample evaluate(const Dataset& dataset, std::uint64_t seed,
                        const EvalContext* ctx = nullptr) const {
    OutputSample out = evaluate_impl(dataset, seed, ctx);
    if (out.values.size() != spec_.output_dim) {
      throw Error(ErrorCode::kContractDim,
                  "mechanism output has dimension " +
                      std::to_string(out.values.size()) + ", declared " +
                      std::to_string(spec_.output_dim));
    }
    const double norm = out.values.norm();
    if (norm > spec_.output_radius) {
      throw Error(ErrorCode::kContractRadius,
                  "output l2 norm " + std::to_string(norm) +
                      " exceeds declared radius " +
                      std::to_string(spec_.output_radius));
    }
    return out;
  }

 protected:
  virtual OutputSample evaluate_impl(const Dataset& dataset,
                                     std::uint64_t seed,
                                     const EvalContext* ctx) const = 0;

 private:
  MechanismSpec spec_;
};

class BuiltinMechanism final : public MechanismOracle {
 public:
  explicit BuiltinMechanism(MechanismSpec spec)
      : MechanismOracle(std::move(spec)) {}

 protected:
  OutputSample evaluate_impl(const Dataset& dataset, std::uint64_t /*seed*/,
                             const EvalContext* /*ctx*/) const override {
    switch (spec().kind) {
      case MechanismKind::kBuiltinMean: {
        if (dataset.rows() == 0) {
          throw Error(ErrorCode::kInputConfig,
                      "builtin-mean is undefined on an empty dataset");
        }
        Eigen::VectorXd sum = sorted_column_sums(dataset);
        return {sum / static_cast<double>(dataset.rows())};
      }
      case MechanismKind::kBuiltinSum: {
        if (dataset.rows() == 0) {
          // empty-sum convention: the zero vector
          return {Eigen::VectorXd::Zero(output_dim())};
        }
        return {sorted_column_sums(dataset)};
      }
      case MechanismKind::kBuiltinIdentity: {
        if (dataset.rows() != 1) {
          throw Error(ErrorCode::kInputConfig,
                      "builtin-identity requires a single-row dataset");
        }
        return {dataset.row(0).transpose()};
      }
      default:
        throw Error(ErrorCode::kInputConfig, "not a builtin mechanism");
    }
  }

 private:
  // Column sums accumulated in sorted order so row permutations reproduce
  // bitwise-identical outputs.
  static Eigen::VectorXd sorted_column_sums(const Dataset& dataset) {
    Eigen::VectorXd out(dataset.cols());
    std::vector<double> column(static_cast<std::size_t>(dataset.rows()));
    for (Eigen::Index j = 0; j < dataset.cols(); ++j) {
      for (Eigen::Index i = 0; i < dataset.rows(); ++i) {
        column[static_cast<std::size_t>(i)] = dataset(i, j);
      }
      std::sort(column.begin(), column.end());
      double acc = 0.0;
      for (double x : column) acc += x;
      out[j] = acc;
    }
    return out;
  }
};

class SubprocessMechanism final : public MechanismOracle {
 public:
  SubprocessMechanism(MechanismSpec spec, unsigned procs)
      : MechanismOracle(spec),
        pool_(std::make_shared<SubprocessPool>(spec.command, procs)) {}

  SubprocessMechanism(MechanismSpec spec, std::shared_ptr<SubprocessPool> pool)
      : MechanismOracle(std::move(spec)), pool_(std::move(pool)) {}

  std::shared_ptr<SubprocessPool> pool() const { return pool_; }

 protected:
  OutputSample evaluate_impl(const Dataset& dataset, std::uint64_t seed,
                             const EvalContext* ctx) const override {
    nlohmann::json req{{"op", "evaluate"},
                       {"rows", detail::rows_to_json(dataset)},
                       {"seed", seed}};
    if (ctx != nullptr && ctx->joint_seed != nullptr) {
      req["joint_seed"] = *ctx->joint_seed;
    }
    if (ctx != nullptr && ctx->history != nullptr) {
      nlohmann::json hist = nlohmann::json::array();
      for (const auto& y : *ctx->history) {
        nlohmann::json v = nlohmann::json::array();
        for (Eigen::Index i = 0; i < y.size(); ++i) v.push_back(y[i]);
        hist.push_back(std::move(v));
      }
      req["history"] = std::move(hist);
    }
    const nlohmann::json reply = pool_->request(req);
    if (!reply.contains("output") || !reply["output"].is_array()) {
      throw Error(ErrorCode::kOracleSubprocess,
                  "evaluate reply missing \"output\" array");
    }
    const auto& arr = reply["output"];
    Eigen::VectorXd values(static_cast<Eigen::Index>(arr.size()));
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      values[i] = arr[static_cast<std::size_t>(i)].get<double>();
    }
    return {std::move(values)};
  }

 private:
  std::shared_ptr<SubprocessPool> pool_;
};

// Test-friendly adapter around a callable.
class CallableMechanism final : public MechanismOracle {
 public:
  using Fn = std::function<Eigen::VectorXd(const Dataset&, std::uint64_t)>;
  CallableMechanism(MechanismSpec spec, Fn fn)
      : MechanismOracle(std::move(spec)), fn_(std::move(fn)) {}

 protected:
  OutputSample evaluate_impl(const Dataset& dataset, std::uint64_t seed,
                             const EvalContext*) const override {
    return {fn_(dataset, seed)};
  }

 private:
  Fn fn_;
};

inline std::unique_ptr<MechanismOracle> make_mechanism_oracle(
    const MechanismSpec& spec, unsigned procs = 1) {
  if (spec.kind == MechanismKind::kSubprocess) {
    return std::make_unique<SubprocessMechanism>(spec, procs);
  }
  return std::make_unique<BuiltinMechanism>(spec);
}

// Generate-then-evaluate convenience used by the analyzers.
inline OutputSample run_trial(const DataOracle& gen,
                              const MechanismOracle& mech,
                              std::uint64_t master_seed, std::uint64_t trial,
                              SeedRole data_role, std::uint64_t eval_seed) {
  const Dataset dataset =
      gen.generate(derive_stream_seed(master_seed, trial, data_role));
  return mech.evaluate(dataset, eval_seed);
}

}  // namespace pacest::oracle
