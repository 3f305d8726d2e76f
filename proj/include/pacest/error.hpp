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

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace pacest {

// Machine-readable error codes surfaced through the CLI exit contract.
enum class ErrorCode {
  kInputPool,        // unreadable/ragged/non-finite CSV pool
  kInputConfig,      // invalid configuration or parameter contract
  kOracleSubprocess, // child process failed or spoke malformed protocol
  kContractDim,      // dimension mismatch against the declared d
  kContractRadius,   // output exceeded the declared l2 radius r
  kContractPsd,      // matrix not symmetric PSD within tolerance
  kCompositionRule,  // certificate does not qualify for the composition rule
  kLedgerBudget,     // stepping past the final budget v_T
  kLedgerIntegrity,  // journal/sidecar checksum or schema mismatch
  kCalibrationRange, // top-up search range does not bracket the target
  kIo,               // filesystem failure
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInputPool: return "INPUT_POOL";
    case ErrorCode::kInputConfig: return "INPUT_CONFIG";
    case ErrorCode::kOracleSubprocess: return "ORACLE_SUBPROCESS";
    case ErrorCode::kContractDim: return "CONTRACT_DIM";
    case ErrorCode::kContractRadius: return "CONTRACT_RADIUS";
    case ErrorCode::kContractPsd: return "CONTRACT_PSD";
    case ErrorCode::kCompositionRule: return "COMPOSITION_RULE";
    case ErrorCode::kLedgerBudget: return "LEDGER_BUDGET";
    case ErrorCode::kLedgerIntegrity: return "LEDGER_INTEGRITY";
    case ErrorCode::kCalibrationRange: return "CALIBRATION_RANGE";
    case ErrorCode::kIo: return "IO";
  }
  return "UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message,
        std::optional<std::uint64_t> trial = std::nullopt)
      : std::runtime_error(format(code, message, trial)),
        code_(code),
        message_(std::move(message)),
        trial_(trial) {}

  ErrorCode code() const { return code_; }
  const std::string& raw_message() const { return message_; }
  std::optional<std::uint64_t> trial() const { return trial_; }

  Error with_trial(std::uint64_t trial) const {
    return trial_ ? *this : Error(code_, message_, trial);
  }

 private:
  static std::string format(ErrorCode code, const std::string& message,
                            std::optional<std::uint64_t> trial) {
    std::string out = std::string("[") + error_code_name(code) + "] " + message;
    if (trial) out += " (trial " + std::to_string(*trial) + ")";
    return out;
  }

  ErrorCode code_;
  std::string message_;
  std::optional<std::uint64_t> trial_;
};

}  // namespace pacest
