// Copyright 2026 The snoutbench Authors
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace snoutbench {

enum class ErrorCode {
  kIo,
  kSchemaMismatch,
  kNotEnoughUniqueRecords,
  kSizeTooLarge,
  kNoCondition,
  kBudgetExhausted,
  kInvalidKind,
  kInvalidPivot,
  kEmptyTestSet,
  kConfig,
  kInvalidArgument,
};

constexpr std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kNotEnoughUniqueRecords: return "NotEnoughUniqueRecords";
    case ErrorCode::kSizeTooLarge: return "SizeTooLarge";
    case ErrorCode::kNoCondition: return "NoCondition";
    case ErrorCode::kBudgetExhausted: return "BudgetExhausted";
    case ErrorCode::kInvalidKind: return "InvalidKind";
    case ErrorCode::kInvalidPivot: return "InvalidPivot";
    case ErrorCode::kEmptyTestSet: return "EmptyTestSet";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

// All library failures are reported as Error; code() tells them apart.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace snoutbench
