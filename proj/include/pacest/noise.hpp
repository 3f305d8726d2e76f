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
#include <variant>

#include "pacest/error.hpp"
#include "pacest/linalg.hpp"
#include "pacest/rng.hpp"

namespace pacest {

struct AnisotropicNoise {
  Eigen::MatrixXd basis;      // orthonormal columns, eigenvectors of Sigma_B
  Eigen::VectorXd variances;  // eigenvalues of Sigma_B, nonnegative
};

struct IsotropicNoise {
  double variance = 0.0;
};

// A zero-mean Gaussian perturbation law N(0, Sigma_B).
struct NoiseSpec {
  Eigen::Index dim = 0;
  std::variant<AnisotropicNoise, IsotropicNoise> law = IsotropicNoise{};

  bool isotropic() const {
    return std::holds_alternative<IsotropicNoise>(law);
  }

  double trace() const {
    if (isotropic()) {
      return static_cast<double>(dim) * std::get<IsotropicNoise>(law).variance;
    }
    return std::get<AnisotropicNoise>(law).variances.sum();
  }

  double magnitude() const { return std::sqrt(trace()); }

  Eigen::MatrixXd covariance() const {
    if (isotropic()) {
      return std::get<IsotropicNoise>(law).variance *
             Eigen::MatrixXd::Identity(dim, dim);
    }
    const auto& a = std::get<AnisotropicNoise>(law);
    return a.basis * a.variances.asDiagonal() * a.basis.transpose();
  }

  void validate() const {
    if (dim <= 0) throw Error(ErrorCode::kInputConfig, "noise dim must be > 0");
    if (isotropic()) {
      if (!(std::get<IsotropicNoise>(law).variance >= 0.0)) {
        throw Error(ErrorCode::kContractPsd, "noise variance must be >= 0");
      }
      return;
    }
    const auto& a = std::get<AnisotropicNoise>(law);
    if (a.basis.rows() != dim || a.basis.cols() != dim ||
        a.variances.size() != dim) {
      throw Error(ErrorCode::kContractDim, "noise basis/variances shape");
    }
    if (!is_orthonormal(a.basis)) {
      throw Error(ErrorCode::kContractPsd,
                  "noise basis columns must be orthonormal within 1e-8");
    }
    if ((a.variances.array() < 0.0).any()) {
      throw Error(ErrorCode::kContractPsd, "noise variances must be >= 0");
    }
  }
};

inline NoiseSpec isotropic_noise_spec(Eigen::Index dim, double variance) {
  NoiseSpec s;
  s.dim = dim;
  s.law = IsotropicNoise{variance};
  return s;
}

// Draw from N(0, Sigma_B); anisotropic draws are U diag(sigma_j) z with z
// standard normal in the eigenbasis.
inline Eigen::VectorXd sample_noise(const NoiseSpec& spec, Rng& rng) {
  spec.validate();
  Eigen::VectorXd z(spec.dim);
  for (Eigen::Index i = 0; i < spec.dim; ++i) z[i] = rng.normal();
  if (spec.isotropic()) {
    return std::sqrt(std::get<IsotropicNoise>(spec.law).variance) * z;
  }
  const auto& a = std::get<AnisotropicNoise>(spec.law);
  return a.basis * (a.variances.cwiseSqrt().asDiagonal() * z);
}

inline Eigen::VectorXd sample_noise(const NoiseSpec& spec,
                                    std::uint64_t stream_seed) {
  Rng rng(stream_seed);
  return sample_noise(spec, rng);
}

}  // namespace pacest
