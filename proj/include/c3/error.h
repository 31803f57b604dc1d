// Copyright 2026 The c3kit Authors
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
#include <vector>

namespace c3 {

// Every failure raised by the library carries one of these codes so that the
// CLI and the HTTP service can map it to an exit status or response code.
enum class ErrorCode {
  kInvalidArgument,
  kIoError,
  // Model files.
  kMissingFile,
  kTruncatedFile,
  kIntegrityError,
  kMalformedText,
  kUnsupportedModelInText,
  // Geometry.
  kNonUnitQuaternion,
  kBehindCamera,
  kUnsupportedCameraModel,
  kDegenerateUp,
  kDegenerateConfiguration,
  kVerticalCamera,
  // Correspondence derivation.
  kNoVisiblePoints,
  kUnknownImage,
  // Dataset.
  kEmptyInput,
  kEmptyAfterCrop,
  kVersionMismatch,
  kChecksumFailure,
  // Metrics.
  kDimensionMismatch,
  kEmptySparseSet,
  kMissingPredictions,
  kEmptyGroundTruth,
  kEmptyErrors,
  kConfidenceRequired,
  kAllZeroDifferences,
  kLengthMismatch,
  // Service.
  kEmptyModel,
  kVersionConflict,
  kValidationError,
  kNotFound,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::vector<std::string> details = {})
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code),
        details_(std::move(details)) {}

  ErrorCode code() const { return code_; }

  // Offending ids, missing queries, etc. Machine readable.
  const std::vector<std::string>& details() const { return details_; }

 private:
  ErrorCode code_;
  std::vector<std::string> details_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message,
                              std::vector<std::string> details = {}) {
  throw Error(code, message, std::move(details));
}

}  // namespace c3
