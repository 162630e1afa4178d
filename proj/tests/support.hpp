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

// Helpers shared by the unit and acceptance tests.

#ifndef MERITFED_TESTS_SUPPORT_HPP_
#define MERITFED_TESTS_SUPPORT_HPP_

#include <cmath>
#include <random>

#include "meritfed/simplex.hpp"
#include "meritfed/types.hpp"

namespace meritfed::testing {

// fhat(y) = sum_k a_k (y_k - c_k)^2 with a_k > 0; no samples.
class QuadraticOracle final : public LossOracle {
 public:
  QuadraticOracle(Vector center, Vector scale)
      : center_(std::move(center)), scale_(std::move(scale)) {}
  explicit QuadraticOracle(Vector center)
      : center_(std::move(center)), scale_(Vector::Ones(center_.size())) {}

  Index sample_count() const override { return 1; }
  double loss(const Vector& y, Subset = std::nullopt) const override {
    return (scale_.array() * (y - center_).array().square()).sum();
  }
  LossGrad loss_grad(const Vector& y, Subset = std::nullopt) const override {
    return {loss(y), (2.0 * scale_.array() * (y - center_).array()).matrix()};
  }

 private:
  Vector center_;
  Vector scale_;
};

inline Vector random_normal(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = z(rng);
  return v;
}

inline Matrix random_normal(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = z(rng);
  }
  return m;
}

inline bool is_simplex(const Vector& w, double tol = 1e-9) {
  if (w.size() < 1 || !w.allFinite() || w.minCoeff() < 0.0) return false;
  return std::abs(w.sum() - 1.0) <= tol;
}

}  // namespace meritfed::testing

#endif  // MERITFED_TESTS_SUPPORT_HPP_
