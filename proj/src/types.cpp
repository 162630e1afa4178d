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

#include "meritfed/types.hpp"

#include <string>

#include "meritfed/error.hpp"

namespace meritfed {

Vector GradientSet::combine(const Vector& w) const {
  if (w.size() != clients()) {
    throw Error(ErrorCode::kShape, "weight vector has " +
                                       std::to_string(w.size()) +
                                       " entries for " +
                                       std::to_string(clients()) + " clients");
  }
  Vector out = Vector::Zero(dim());
  for (Index i = 0; i < clients(); ++i) {
    if (w[i] != 0.0) out.noalias() += w[i] * messages.col(i);
  }
  return out;
}

void GradientSet::validate(Index expected_dim) const {
  if (expected_dim >= 0 && dim() != expected_dim) {
    throw Error(ErrorCode::kShape, "gradient dimension " +
                                       std::to_string(dim()) + " != model dimension " +
                                       std::to_string(expected_dim));
  }
  if (!messages.allFinite()) {
    throw Error(ErrorCode::kNumericInput, "gradient set contains non-finite entries");
  }
}

}  // namespace meritfed
