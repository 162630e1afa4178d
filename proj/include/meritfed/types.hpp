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

#ifndef MERITFED_TYPES_HPP_
#define MERITFED_TYPES_HPP_

#include <cstdint>
#include <optional>
#include <span>

#include <Eigen/Dense>

namespace meritfed {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Selection of sample indices into a dataset; std::nullopt means "all".
using Subset = std::optional<std::span<const Index>>;

struct LossGrad {
  double loss = 0.0;
  Vector grad;
};

// Messages received by the server in one round. Column i holds client i's
// vector, so the matrix is d x n.
struct GradientSet {
  std::int64_t round = 0;
  Matrix messages;

  Index clients() const { return messages.cols(); }
  Index dim() const { return messages.rows(); }

  // sum_i w_i g_i, accumulated in client-index order.
  Vector combine(const Vector& w) const;

  // Throws kShape for a dimension other than `expected_dim` (when >= 0) and
  // kNumericInput when any entry is non-finite.
  void validate(Index expected_dim = -1) const;
};

}  // namespace meritfed

#endif  // MERITFED_TYPES_HPP_
