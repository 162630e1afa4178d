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

// Optimization over the probability simplex: entropic mirror descent, the
// two-point zeroth-order estimator and the auxiliary weight problem
//
//   min_{w in simplex}  phi(w) = fhat(x - gamma * sum_i w_i g_i).

#ifndef MERITFED_SIMPLEX_HPP_
#define MERITFED_SIMPLEX_HPP_

#include <functional>
#include <utility>

#include "meritfed/rng.hpp"
#include "meritfed/types.hpp"

namespace meritfed {

inline constexpr double kSimplexTolerance = 1e-9;

// A point of the unit simplex. Construction validates nonnegativity and the
// unit sum (within kSimplexTolerance) and renormalizes exactly.
class SimplexWeights {
 public:
  static SimplexWeights uniform(Index n);
  static SimplexWeights from_values(Vector values);

  const Vector& values() const noexcept { return values_; }
  Index size() const noexcept { return values_.size(); }
  double operator[](Index i) const { return values_[i]; }

 private:
  explicit SimplexWeights(Vector values) : values_(std::move(values)) {}

  Vector values_;
};

SimplexWeights uniform_weights(Index n);

// One mirror-descent step with negative-entropy prox:
//   w'_i = w_i exp(-step g_i) / sum_j w_j exp(-step g_j).
// Exponents are shifted by their maximum before exponentiation; entries that
// are exactly zero stay zero.
SimplexWeights entropic_md_step(const SimplexWeights& w, const Vector& g,
                                double step);

using ScalarField = std::function<double(const Vector&)>;
using VectorField = std::function<Vector(const Vector&)>;

// [n (phi(w + h e) - phi(w - h e)) / (2h)] * e for a unit direction e.
Vector zo_two_point_estimate(const ScalarField& phi, const Vector& w, double h,
                             const Vector& direction);

// d phi / d w_i = -gamma <g_i, grad fhat(x - gamma sum_j w_j g_j)>.
Vector weight_gradient_exact(const Vector& x, const GradientSet& grads,
                             double model_step, const Vector& w,
                             const VectorField& loss_gradient);

// <grad, w> - min_i grad_i. For convex phi this bounds phi(w) - min phi.
double frank_wolfe_gap(const Vector& w, const Vector& grad);

// Empirical loss (and gradient) evaluated at a candidate model point.
class LossOracle {
 public:
  virtual ~LossOracle() = default;

  virtual Index sample_count() const = 0;
  virtual double loss(const Vector& y, Subset subset = std::nullopt) const = 0;
  virtual LossGrad loss_grad(const Vector& y,
                             Subset subset = std::nullopt) const = 0;
};

enum class WeightEstimator { kExactChainRule, kZerothOrder };

struct MdConfig {
  double step_size = 1.0;
  int steps = 10;
  WeightEstimator estimator = WeightEstimator::kExactChainRule;
  double smoothing = 1e-4;
  // 0 evaluates the full validation set; > 0 draws a fresh minibatch of this
  // size for every step.
  Index minibatch = 0;

  void validate(Index validation_size) const;

  bool operator==(const MdConfig&) const = default;
};

// phi(w) = fhat(x - gamma * G w). Holds references to `grads` and `oracle`,
// which must outlive the objective.
class WeightObjective {
 public:
  WeightObjective(Vector x, const GradientSet& grads, double model_step,
                  const LossOracle& oracle);

  Index clients() const { return grads_->clients(); }
  const Vector& iterate() const { return x_; }
  double model_step() const { return model_step_; }
  const LossOracle& oracle() const { return *oracle_; }

  // x - gamma * G w. Defined for any real w, which the two-point estimator
  // relies on when it steps off the simplex.
  Vector candidate(const Vector& w) const;

  double value(const Vector& w, Subset subset = std::nullopt) const;
  std::pair<double, Vector> value_and_gradient(const Vector& w,
                                               Subset subset = std::nullopt) const;

 private:
  Vector x_;
  const GradientSet* grads_;
  double model_step_;
  const LossOracle* oracle_;
};

struct WeightSolution {
  SimplexWeights weights;
  // Full-validation objective at `weights`.
  double value = 0.0;
  // Frank-Wolfe gap at `weights` (upper bound on the suboptimality when phi
  // is convex).
  double delta = 0.0;
  // Which of the K + 1 iterates was returned (0 = the starting point).
  int best_step = 0;
};

// Runs cfg.steps mirror-descent iterations from `start` (uniform when null)
// and returns the iterate with the lowest full-validation objective.
WeightSolution solve_weights(const WeightObjective& objective,
                             const MdConfig& cfg, Rng& rng,
                             const SimplexWeights* start = nullptr);

struct GridMinimum {
  Vector weights;
  double value = 0.0;
};

// Exhaustive search over {w : w_i = k_i / resolution, sum k_i = resolution}.
GridMinimum simplex_grid_minimum(Index n, int resolution, const ScalarField& phi);

}  // namespace meritfed

#endif  // MERITFED_SIMPLEX_HPP_
