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

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pacest/error.hpp"

namespace pacest {

enum class CertificateMethod {
  kDeterministicCov,  // Algorithm-1 style covariance estimation
  kRandomizedDist,    // Algorithm-2 style permutation-distance estimation
  kVerified,          // Algorithm-3 style proposal verification
  kComposed,          // produced by the composition rules
};

inline const char* certificate_method_name(CertificateMethod m) {
  switch (m) {
    case CertificateMethod::kDeterministicCov: return "deterministic-cov";
    case CertificateMethod::kRandomizedDist: return "randomized-dist";
    case CertificateMethod::kVerified: return "verified";
    case CertificateMethod::kComposed: return "composed";
  }
  return "unknown";
}

struct CertificateDiagnostics {
  std::vector<double> eigenvalues;  // sorted non-increasing (det only)
  bool eigen_gap_branch = false;
  double noise_trace = 0.0;
  double noise_magnitude = 0.0;  // sqrt(noise_trace)
  double psi_bar = std::numeric_limits<double>::quiet_NaN();
  double psi_bar_std_error = std::numeric_limits<double>::quiet_NaN();
  double kappa = std::numeric_limits<double>::quiet_NaN();
  bool confidence_check_passed = true;
};

// A claim "MI <= v_claimed (nats) with confidence 1-gamma", together with
// how it was produced.
struct MiCertificate {
  CertificateMethod method = CertificateMethod::kDeterministicCov;
  double v_claimed = 0.0;
  double confidence = 0.0;  // 1 - gamma
  std::uint64_t m_used = 0;
  double c = 0.0;
  CertificateDiagnostics diagnostics;
  // Conditions that demote the exit code (unverified confidence, unmet
  // theorem hypotheses). Informational notes stay in `notes`.
  std::vector<std::string> caveats;
  std::vector<std::string> notes;

  void validate() const {
    if (!(v_claimed > 0.0)) {
      throw Error(ErrorCode::kInputConfig, "certificate v_claimed must be > 0");
    }
    if (!(confidence > 0.0 && confidence < 1.0)) {
      throw Error(ErrorCode::kInputConfig,
                  "certificate confidence must lie in (0,1)");
    }
    const double mag = std::sqrt(diagnostics.noise_trace);
    if (std::abs(mag - diagnostics.noise_magnitude) > 1e-9) {
      throw Error(ErrorCode::kInputConfig,
                  "noise magnitude must equal sqrt(noise trace)");
    }
  }
};

}  // namespace pacest
