// Copyright 2026 The FedMIA Audit Authors
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

#ifndef FEDMIA_ERROR_HPP_
#define FEDMIA_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace fedmia {

enum class ErrorCode {
  kShape,
  kEmptySample,
  kParameter,
  kDegenerate,
  kZeroGradient,
  kConfig,
  kParse,
  kIo,
  kInsufficientData,
  kInsufficientClients,
  kCohort,
  kReferencePoint,
  kContract,
  kIntegrity,
};

constexpr std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kEmptySample: return "empty_sample";
    case ErrorCode::kParameter: return "parameter";
    case ErrorCode::kDegenerate: return "degenerate";
    case ErrorCode::kZeroGradient: return "zero_gradient";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kInsufficientData: return "insufficient_data";
    case ErrorCode::kInsufficientClients: return "insufficient_clients";
    case ErrorCode::kCohort: return "cohort";
    case ErrorCode::kReferencePoint: return "reference_point";
    case ErrorCode::kContract: return "contract";
    case ErrorCode::kIntegrity: return "integrity";
  }
  return "unknown";
}

// Every failure raised by the library carries a code so callers (and the CLI
// exit-code mapping) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code),
        message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the code prefix, for re-wrapping with more context.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

inline void Require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace fedmia

#endif  // FEDMIA_ERROR_HPP_
