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

#ifndef MERITFED_ERROR_HPP_
#define MERITFED_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace meritfed {

enum class ErrorCode {
  kInvalidDimension,
  kNumericInput,
  kSolverDegenerate,
  kInvalidSmoothing,
  kShape,
  kEmptyBatch,
  kUnsupportedTask,
  kConfig,
  kData,
  kAttackInput,
  kUndefinedAngle,
  kIo,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception; `code()` identifies the
// failure class so callers and tests can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  // The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace meritfed

#endif  // MERITFED_ERROR_HPP_
