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

#include "meritfed/aggregators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "meritfed/error.hpp"

namespace meritfed {
namespace {

void check_target(const GradientSet& grads, Index target) {
  if (target < 0 || target >= grads.clients()) {
    throw Error(ErrorCode::kConfig, "target index out of range");
  }
}

}  // namespace

void MethodConfig::validate(Index clients) const {
  if (!(model_step > 0.0)) throw Error(ErrorCode::kConfig, "model step must be positive");
  switch (kind) {
    case MethodKind::kSgdIdeal:
      for (Index i : ideal_set) {
        if (i < 0 || i >= clients) {
          throw Error(ErrorCode::kConfig, "ideal set index out of range");
        }
      }
      break;
    case MethodKind::kFedAvgSampled:
      if (sampled_clients < 1 || sampled_clients > clients) {
        throw Error(ErrorCode::kConfig, "sampled client count " +
                                            std::to_string(sampled_clients) +
                                            " outside [1, " + std::to_string(clients) + "]");
      }
      break;
    case MethodKind::kTawt:
      if (!(tawt_step > 0.0)) throw Error(ErrorCode::kConfig, "TAWT step must be positive");
      break;
    default:
      break;
  }
}

SimplexWeights weights_sgd_full(Index n) { return SimplexWeights::uniform(n); }

SimplexWeights weights_sgd_ideal(std::span<const Index> ideal, Index n) {
  if (ideal.empty()) throw Error(ErrorCode::kConfig, "SGD-Ideal needs a nonempty client set");
  if (n < 1) throw Error(ErrorCode::kInvalidDimension, "client count must be >= 1");
  Vector w = Vector::Zero(n);
  for (Index i : ideal) {
    if (i < 0 || i >= n) throw Error(ErrorCode::kConfig, "ideal set index out of range");
    w[i] = 1.0;
  }
  w /= w.sum();
  return SimplexWeights::from_values(std::move(w));
}

double angle(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kShape, "vectors differ in length");
  const double aa = a.squaredNorm();
  const double bb = b.squaredNorm();
  if (aa == 0.0 || bb == 0.0) {
    throw Error(ErrorCode::kUndefinedAngle, "angle with a zero vector is undefined");
  }
  const double cosine = std::clamp(a.dot(b) / std::sqrt(aa * bb), -1.0, 1.0);
  return std::acos(cosine);
}

double gompertz(double theta, double alpha) {
  return alpha * (1.0 - std::exp(-std::exp(-alpha * theta)));
}

SimplexWeights weights_fedadp(const GradientSet& grads, Index target,
                              MethodState& state, double alpha,
                              AngleSmoothing smoothing) {
  check_target(grads, target);
  const Index n = grads.clients();
  const Vector reference = grads.messages.col(target);
  Vector angles(n);
  for (Index i = 0; i < n; ++i) angles[i] = angle(reference, grads.messages.col(i));

  state.rounds += 1;
  if (smoothing == AngleSmoothing::kRunningMean && state.smoothed_angles.size() == n) {
    const double t = static_cast<double>(state.rounds);
    state.smoothed_angles = ((t - 1.0) * state.smoothed_angles + angles) / t;
  } else {
    state.smoothed_angles = angles;
  }

  Vector score(n);
  for (Index i = 0; i < n; ++i) score[i] = gompertz(state.smoothed_angles[i], alpha);
  Vector w = (score.array() - score.maxCoeff()).exp().matrix();
  w /= w.sum();
  return SimplexWeights::from_values(std::move(w));
}

SimplexWeights weights_tawt(const GradientSet& grads, Index target,
                            MethodState& state, double eta, double c,
                            TawtMeasure measure) {
  check_target(grads, target);
  const Index n = grads.clients();
  if (!state.previous || state.previous->size() != n) {
    state.previous = SimplexWeights::uniform(n);
  }
  const Vector reference = grads.messages.col(target);
  Vector pseudo(n);
  for (Index i = 0; i < n; ++i) {
    const double theta = angle(reference, grads.messages.col(i));
    pseudo[i] = -c * (measure == TawtMeasure::kCosine ? std::cos(theta) : theta);
  }
  state.rounds += 1;
  state.previous = entropic_md_step(*state.previous, pseudo, eta);
  return *state.previous;
}

SimplexWeights weights_fedavg_sampled(Index n, Index k, Rng& rng) {
  if (k < 1 || k > n) {
    throw Error(ErrorCode::kConfig, "sampled client count " + std::to_string(k) +
                                        " outside [1, " + std::to_string(n) + "]");
  }
  const std::vector<Index> chosen = sample_without_replacement(n, k, rng);
  return weights_sgd_ideal(chosen, n);
}

WeightSolution weights_meritfed(const Vector& x, const GradientSet& grads,
                                double model_step, const MdConfig& md,
                                const LossOracle& oracle, Rng& rng,
                                const SimplexWeights* start) {
  const WeightObjective objective(x, grads, model_step, oracle);
  return solve_weights(objective, md, rng, start);
}

Vector apply_update(const Vector& x, const GradientSet& grads,
                    const SimplexWeights& w, double model_step) {
  grads.validate(x.size());
  return x - model_step * grads.combine(w.values());
}

Aggregator::Aggregator(MethodConfig config, Index clients, Index target,
                       std::vector<Index> ideal_set)
    : config_(std::move(config)),
      clients_(clients),
      target_(target),
      ideal_set_(config_.ideal_set.empty() ? std::move(ideal_set) : config_.ideal_set) {
  config_.validate(clients_);
  if (config_.kind == MethodKind::kSgdIdeal && ideal_set_.empty()) {
    throw Error(ErrorCode::kConfig, "SGD-Ideal needs a nonempty client set");
  }
}

AggregationResult Aggregator::aggregate(const Vector& x, const GradientSet& grads,
                                        const LossOracle& oracle, Rng& rng) {
  if (grads.clients() != clients_) {
    throw Error(ErrorCode::kShape, "gradient set has the wrong client count");
  }
  switch (config_.kind) {
    case MethodKind::kSgdFull:
      return {weights_sgd_full(clients_), 0.0};
    case MethodKind::kSgdIdeal:
      return {weights_sgd_ideal(ideal_set_, clients_), 0.0};
    case MethodKind::kFedAdp:
      return {weights_fedadp(grads, target_, state_, config_.gompertz_alpha,
                             config_.smoothing),
              0.0};
    case MethodKind::kTawt:
      return {weights_tawt(grads, target_, state_, config_.tawt_step, config_.tawt_scale,
                           config_.tawt_measure),
              0.0};
    case MethodKind::kFedAvgSampled:
      return {weights_fedavg_sampled(clients_, config_.sampled_clients, rng), 0.0};
    case MethodKind::kMeritFed: {
      const SimplexWeights* start =
          config_.warm_start && state_.previous ? &*state_.previous : nullptr;
      WeightSolution sol = weights_meritfed(x, grads, config_.model_step, config_.md,
                                            oracle, rng, start);
      state_.rounds += 1;
      state_.previous = sol.weights;
      return {std::move(sol.weights), sol.delta};
    }
  }
  throw Error(ErrorCode::kConfig, "unknown method kind");
}

}  // namespace meritfed
