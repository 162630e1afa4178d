/*
 * Copyright 2026 The MeritFed Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "meritfed/error.hpp"

namespace meritfed {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidDimension:
      return "invalid-dimension";
    case ErrorCode::kNumericInput:
      return "numeric-input";
    case ErrorCode::kSolverDegenerate:
      return "solver-degenerate";
    case ErrorCode::kInvalidSmoothing:
      return "invalid-smoothing";
    case ErrorCode::kShape:
      return "shape";
    case ErrorCode::kEmptyBatch:
      return "empty-batch";
    case ErrorCode::kUnsupportedTask:
      return "unsupported-task";
    case ErrorCode::kConfig:
      return "config";
    case ErrorCode::kData:
      return "data";
    case ErrorCode::kAttackInput:
      return "attack-input";
    case ErrorCode::kUndefinedAngle:
      return "undefined-angle";
    case ErrorCode::kIo:
      return "io";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + " error: " + message),
      code_(code),
      detail_(message) {}

}  // namespace meritfed
