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

#include "meritfed/simplex.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "meritfed/error.hpp"

namespace meritfed {

SimplexWeights SimplexWeights::uniform(Index n) {
  if (n < 1) {
    throw Error(ErrorCode::kInvalidDimension, "simplex dimension must be >= 1, got " +
                                                  std::to_string(n));
  }
  return SimplexWeights(Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

SimplexWeights SimplexWeights::from_values(Vector values) {
  if (values.size() < 1) {
    throw Error(ErrorCode::kInvalidDimension, "simplex dimension must be >= 1");
  }
  if (!values.allFinite()) {
    throw Error(ErrorCode::kNumericInput, "simplex weights must be finite");
  }
  if (values.minCoeff() < 0.0) {
    throw Error(ErrorCode::kNumericInput, "simplex weights must be nonnegative");
  }
  const double total = values.sum();
  if (std::abs(total - 1.0) > kSimplexTolerance) {
    throw Error(ErrorCode::kNumericInput,
                "simplex weights sum to " + std::to_string(total));
  }
  values /= total;
  return SimplexWeights(std::move(values));
}

SimplexWeights uniform_weights(Index n) { return SimplexWeights::uniform(n); }

SimplexWeights entropic_md_step(const SimplexWeights& w, const Vector& g,
                                double step) {
  if (g.size() != w.size()) {
    throw Error(ErrorCode::kShape, "gradient has " + std::to_string(g.size()) +
                                       " entries for " + std::to_string(w.size()) +
                                       " weights");
  }
  if (!g.allFinite()) {
    throw Error(ErrorCode::kNumericInput, "mirror-descent gradient is not finite");
  }
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw Error(ErrorCode::kConfig, "mirror-descent step size must be positive");
  }

  // Work with log w_i - step g_i so that the shift covers the weights too.
  const Index n = w.size();
  Vector exponent(n);
  double top = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n; ++i) {
    exponent[i] = w[i] > 0.0 ? std::log(w[i]) - step * g[i]
                             : -std::numeric_limits<double>::infinity();
    top = std::max(top, exponent[i]);
  }
  if (!std::isfinite(top)) {
    throw Error(ErrorCode::kSolverDegenerate, "no positive weight to update");
  }
  Vector next(n);
  for (Index i = 0; i < n; ++i) next[i] = std::exp(exponent[i] - top);
  const double total = next.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw Error(ErrorCode::kSolverDegenerate, "mirror-descent normalizer is degenerate");
  }
  next /= total;
  return SimplexWeights::from_values(std::move(next));
}

Vector zo_two_point_estimate(const ScalarField& phi, const Vector& w, double h,
                             const Vector& direction) {
  if (!(h > 0.0)) {
    throw Error(ErrorCode::kInvalidSmoothing, "smoothing h must be positive");
  }
  if (direction.size() != w.size()) {
    throw Error(ErrorCode::kShape, "direction and weights differ in length");
  }
  const double n = static_cast<double>(w.size());
  const double plus = phi(w + h * direction);
  const double minus = phi(w - h * direction);
  return (n * (plus - minus) / (2.0 * h)) * direction;
}

Vector weight_gradient_exact(const Vector& x, const GradientSet& grads,
                             double model_step, const Vector& w,
                             const VectorField& loss_gradient) {
  grads.validate(x.size());
  const Vector y = x - model_step * grads.combine(w);
  const Vector outer = loss_gradient(y);
  if (outer.size() != x.size()) {
    throw Error(ErrorCode::kShape, "loss gradient dimension does not match the model");
  }
  return -model_step * (grads.messages.transpose() * outer);
}

double frank_wolfe_gap(const Vector& w, const Vector& grad) {
  if (w.size() != grad.size()) {
    throw Error(ErrorCode::kShape, "gradient and weights differ in length");
  }
  return std::max(0.0, w.dot(grad) - grad.minCoeff());
}

void MdConfig::validate(Index validation_size) const {
  if (!(step_size > 0.0)) {
    throw Error(ErrorCode::kConfig, "mirror-descent step size must be positive");
  }
  if (steps < 1) throw Error(ErrorCode::kConfig, "mirror-descent steps must be >= 1");
  if (!(smoothing > 0.0)) {
    throw Error(ErrorCode::kInvalidSmoothing, "smoothing h must be positive");
  }
  if (minibatch < 0 || minibatch > validation_size) {
    throw Error(ErrorCode::kConfig,
                "mirror-descent minibatch " + std::to_string(minibatch) +
                    " exceeds validation set size " + std::to_string(validation_size));
  }
}

WeightObjective::WeightObjective(Vector x, const GradientSet& grads,
                                 double model_step, const LossOracle& oracle)
    : x_(std::move(x)), grads_(&grads), model_step_(model_step), oracle_(&oracle) {
  grads.validate(x_.size());
  if (!(model_step > 0.0)) {
    throw Error(ErrorCode::kConfig, "model step must be positive");
  }
}

Vector WeightObjective::candidate(const Vector& w) const {
  return x_ - model_step_ * grads_->combine(w);
}

double WeightObjective::value(const Vector& w, Subset subset) const {
  return oracle_->loss(candidate(w), subset);
}

std::pair<double, Vector> WeightObjective::value_and_gradient(const Vector& w,
                                                              Subset subset) const {
  LossGrad lg = oracle_->loss_grad(candidate(w), subset);
  Vector g = -model_step_ * (grads_->messages.transpose() * lg.grad);
  return {lg.loss, std::move(g)};
}

WeightSolution solve_weights(const WeightObjective& objective,
                             const MdConfig& cfg, Rng& rng,
                             const SimplexWeights* start) {
  const LossOracle& oracle = objective.oracle();
  cfg.validate(oracle.sample_count());
  const Index n = objective.clients();
  if (start != nullptr && start->size() != n) {
    throw Error(ErrorCode::kShape, "initial weights do not match the client count");
  }

  SimplexWeights w = start != nullptr ? *start : SimplexWeights::uniform(n);
  const bool full_exact =
      cfg.estimator == WeightEstimator::kExactChainRule && cfg.minibatch == 0;

  auto [value, grad] = objective.value_and_gradient(w.values());
  SimplexWeights best = w;
  double best_value = value;
  Vector best_grad = grad;
  int best_step = 0;
  bool best_grad_valid = true;

  std::vector<Index> batch;
  for (int k = 0; k < cfg.steps; ++k) {
    Subset subset = std::nullopt;
    if (cfg.minibatch > 0) {
      batch = sample_without_replacement(oracle.sample_count(), cfg.minibatch, rng);
      subset = std::span<const Index>(batch);
    }

    Vector step_grad;
    if (cfg.estimator == WeightEstimator::kExactChainRule) {
      step_grad = full_exact ? grad : objective.value_and_gradient(w.values(), subset).second;
    } else {
      const Vector direction = unit_sphere(n, rng);
      auto phi = [&](const Vector& v) { return objective.value(v, subset); };
      step_grad = zo_two_point_estimate(phi, w.values(), cfg.smoothing, direction);
    }

    w = entropic_md_step(w, step_grad, cfg.step_size);
    if (full_exact) {
      std::tie(value, grad) = objective.value_and_gradient(w.values());
    } else {
      value = objective.value(w.values());
    }
    if (value < best_value) {
      best = w;
      best_value = value;
      best_step = k + 1;
      best_grad_valid = full_exact;
      if (full_exact) best_grad = grad;
    }
  }

  if (!best_grad_valid) {
    best_grad = objective.value_and_gradient(best.values()).second;
  }
  const double gap = frank_wolfe_gap(best.values(), best_grad);
  return WeightSolution{std::move(best), best_value, gap, best_step};
}

GridMinimum simplex_grid_minimum(Index n, int resolution, const ScalarField& phi) {
  if (n < 1) throw Error(ErrorCode::kInvalidDimension, "grid dimension must be >= 1");
  if (resolution < 1) throw Error(ErrorCode::kConfig, "grid resolution must be >= 1");

  GridMinimum best{Vector(), std::numeric_limits<double>::infinity()};
  std::vector<int> counts(static_cast<std::size_t>(n), 0);
  Vector w(n);
  // Enumerate compositions of `resolution` into n parts, last part implied.
  auto visit = [&](auto&& self, Index pos, int remaining) -> void {
    if (pos == n - 1) {
      counts[static_cast<std::size_t>(pos)] = remaining;
      for (Index i = 0; i < n; ++i) {
        w[i] = static_cast<double>(counts[static_cast<std::size_t>(i)]) / resolution;
      }
      const double v = phi(w);
      if (v < best.value) best = {w, v};
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      counts[static_cast<std::size_t>(pos)] = c;
      self(self, pos + 1, remaining - c);
    }
  };
  visit(visit, 0, resolution);
  return best;
}

}  // namespace meritfed
