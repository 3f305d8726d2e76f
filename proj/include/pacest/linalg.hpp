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

#include "pacest/error.hpp"

namespace pacest {

inline bool is_symmetric(const Eigen::MatrixXd& m, double tol = 1e-9) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

inline void require_symmetric(const Eigen::MatrixXd& m, const char* what,
                              double tol = 1e-9) {
  if (!is_symmetric(m, tol)) {
    throw Error(ErrorCode::kContractPsd,
                std::string(what) + " must be symmetric within tolerance");
  }
}

struct EigenDecomposition {
  Eigen::VectorXd values;   // non-increasing
  Eigen::MatrixXd vectors;  // columns aligned with values
};

// Symmetric eigendecomposition sorted non-increasing. Eigenvalues below zero
// by more than numerical dust violate the PSD contract; dust is clamped to 0
// when clamp is set (square roots downstream require it).
inline EigenDecomposition sym_eigh_descending(const Eigen::MatrixXd& m,
                                              bool clamp = true) {
  require_symmetric(m, "matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::kContractPsd, "eigendecomposition failed");
  }
  const Eigen::Index d = m.rows();
  EigenDecomposition out;
  out.values.resize(d);
  out.vectors.resize(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    out.values[j] = solver.eigenvalues()[d - 1 - j];
    out.vectors.col(j) = solver.eigenvectors().col(d - 1 - j);
  }
  if (clamp) {
    const double scale = std::max(1.0, std::abs(out.values[0]));
    for (Eigen::Index j = 0; j < d; ++j) {
      if (out.values[j] < -1e-8 * scale) {
        throw Error(ErrorCode::kContractPsd,
                    "matrix has a significantly negative eigenvalue");
      }
      out.values[j] = std::max(out.values[j], 0.0);
    }
  }
  return out;
}

inline void require_psd(const Eigen::MatrixXd& m, const char* what) {
  require_symmetric(m, what);
  (void)sym_eigh_descending(m);
}

// A with A A^T = m (PSD square root in the eigenbasis).
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  const auto eig = sym_eigh_descending(m);
  return eig.vectors * eig.values.cwiseSqrt().asDiagonal();
}

// log det of a positive-definite matrix via Cholesky.
inline double logdet_pd(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kContractPsd,
                std::string(what) + " must be positive definite");
  }
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

inline bool is_orthonormal(const Eigen::MatrixXd& u, double tol = 1e-8) {
  if (u.rows() != u.cols()) return false;
  const Eigen::MatrixXd gram = u.transpose() * u;
  return (gram - Eigen::MatrixXd::Identity(u.rows(), u.cols()))
             .cwiseAbs()
             .maxCoeff() <= tol;
}

}  // namespace pacest
