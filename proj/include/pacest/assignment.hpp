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
#include <limits>
#include <utility>
#include <vector>

#include "pacest/error.hpp"

namespace pacest {

// Exact minimum-cost perfect matching on a square cost matrix via the
// Hungarian method with row/column potentials, O(n^3).
//
// Returns the assignment as perm with perm[row] = column.
inline std::pair<double, std::vector<Eigen::Index>> solve_assignment(
    const Eigen::MatrixXd& cost) {
  if (cost.rows() != cost.cols() || cost.rows() == 0) {
    throw Error(ErrorCode::kContractDim, "assignment needs a square matrix");
  }
  const Eigen::Index n = cost.rows();
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // 1-based arrays; p[j] is the row matched to column j, p[0] the row being
  // inserted on this iteration.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<Eigen::Index> p(n + 1, 0), way(n + 1, 0);
  for (Eigen::Index i = 1; i <= n; ++i) {
    p[0] = i;
    Eigen::Index j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const Eigen::Index i0 = p[j0];
      double delta = kInf;
      Eigen::Index j1 = 0;
      for (Eigen::Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const Eigen::Index j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<Eigen::Index> perm(n, 0);
  for (Eigen::Index j = 1; j <= n; ++j) perm[p[j] - 1] = j - 1;
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) total += cost(i, perm[i]);
  return {total, std::move(perm)};
}

}  // namespace pacest
