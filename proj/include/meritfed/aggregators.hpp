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

// Aggregation-weight rules compared against MeritFed, plus the shared model
// update x <- x - gamma * sum_i w_i g_i.

#ifndef MERITFED_AGGREGATORS_HPP_
#define MERITFED_AGGREGATORS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meritfed/rng.hpp"
#include "meritfed/simplex.hpp"
#include "meritfed/types.hpp"

namespace meritfed {

enum class MethodKind { kMeritFed, kSgdFull, kSgdIdeal, kFedAdp, kTawt, kFedAvgSampled };
enum class AngleSmoothing { kNone, kRunningMean };
// What TAWT feeds into its multiplicative step: -c * cos(angle) or -c * angle.
enum class TawtMeasure { kCosine, kAngle };

struct MethodConfig {
  MethodKind kind = MethodKind::kSgdFull;
  std::string label;
  double model_step = 0.01;

  // MeritFed.
  MdConfig md;
  bool warm_start = true;

  // SGD-Ideal; empty means "derive from the client roles".
  std::vector<Index> ideal_set;

  // FedAdp.
  double gompertz_alpha = 5.0;
  AngleSmoothing smoothing = AngleSmoothing::kRunningMean;

  // TAWT.
  double tawt_step = 1.0;
  double tawt_scale = 1.0;
  TawtMeasure tawt_measure = TawtMeasure::kCosine;

  // FedAvg with client sampling.
  Index sampled_clients = 5;

  void validate(Index clients) const;
};

struct MethodState {
  std::optional<SimplexWeights> previous;  // TAWT / warm-started MeritFed
  Vector smoothed_angles;                  // FedAdp
  std::int64_t rounds = 0;
};

SimplexWeights weights_sgd_full(Index n);
SimplexWeights weights_sgd_ideal(std::span<const Index> ideal, Index n);

// arccos(<a, b> / (|a| |b|)) in [0, pi], argument clamped to [-1, 1].
double angle(const Vector& a, const Vector& b);

// alpha * (1 - exp(-exp(-alpha * theta))).
double gompertz(double theta, double alpha);

SimplexWeights weights_fedadp(const GradientSet& grads, Index target,
                              MethodState& state, double alpha,
                              AngleSmoothing smoothing = AngleSmoothing::kRunningMean);

SimplexWeights weights_tawt(const GradientSet& grads, Index target,
                            MethodState& state, double eta, double c,
                            TawtMeasure measure = TawtMeasure::kCosine);

SimplexWeights weights_fedavg_sampled(Index n, Index k, Rng& rng);

WeightSolution weights_meritfed(const Vector& x, const GradientSet& grads,
                                double model_step, const MdConfig& md,
                                const LossOracle& oracle, Rng& rng,
                                const SimplexWeights* start = nullptr);

Vector apply_update(const Vector& x, const GradientSet& grads,
                    const SimplexWeights& w, double model_step);

struct AggregationResult {
  SimplexWeights weights;
  // Solver accuracy estimate; zero for rules that do not solve for weights.
  double delta = 0.0;
};

// A weighting rule bound to its configuration and cross-round state.
class Aggregator {
 public:
  Aggregator(MethodConfig config, Index clients, Index target,
             std::vector<Index> ideal_set);

  AggregationResult aggregate(const Vector& x, const GradientSet& grads,
                              const LossOracle& oracle, Rng& rng);

  const MethodConfig& config() const { return config_; }
  const MethodState& state() const { return state_; }

 private:
  MethodConfig config_;
  Index clients_;
  Index target_;
  std::vector<Index> ideal_set_;
  MethodState state_;
};

}  // namespace meritfed

#endif  // MERITFED_AGGREGATORS_HPP_
