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

// Federated round loop. Every configured method runs its own trajectory from
// the shared starting point; client sampling noise is keyed by (client, round)
// so all methods see the same minibatch indices in a given round.

#ifndef MERITFED_ENGINE_HPP_
#define MERITFED_ENGINE_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "meritfed/aggregators.hpp"
#include "meritfed/clients.hpp"
#include "meritfed/tasks.hpp"
#include "meritfed/types.hpp"

namespace meritfed {

enum class TaskKind { kMeanEstimation, kSoftmax };

struct ExperimentSpec {
  TaskKind task = TaskKind::kMeanEstimation;

  // Honest clients per data group. The first entry is the target group and
  // includes client 0. Mean estimation: group 1 ~ N(0, I), group 2 ~
  // N(mu 1, I), group 3 ~ N(e, I) with e a random unit vector. Softmax: the
  // target, mixed and disjoint groups.
  std::vector<Index> group_sizes{5, 95, 50};
  // Byzantine clients are appended after the honest ones and hold
  // target-distribution shards.
  Index byzantine = 0;
  std::optional<AttackSpec> attack;

  Index dim = 10;
  double mu = 0.1;

  double alpha = 0.5;
  Index classes = 10;
  Index features = 10;
  Index validation_per_class = 300;
  Index test_per_class = 1000;

  Index shard_size = 1000;
  Index batch_size = 100;
  double model_step = 0.01;
  std::int64_t rounds = 2000;
  std::vector<MethodConfig> methods;

  ValidationMode validation_mode = ValidationMode::kExtraValidation;
  // Mean estimation only; the softmax validation set is per class.
  Index validation_size = 1000;
  // Mean estimation only: MeritFed minimizes the closed-form target loss
  // instead of the validation loss.
  bool exact_validation = false;
  // Mean estimation only: honest clients send exact expected gradients.
  bool noiseless = false;

  std::uint64_t seed = 0;
  int threads = 1;

  Index clients() const;
  std::vector<ClientRole> roles() const;
  void validate() const;
};

struct MethodRoundMetrics {
  // Closed-form quantities; empty when the task has no known optimum.
  std::optional<double> dist_sq;
  std::optional<double> loss_gap;
  std::optional<double> grad_norm_sq;
  double val_loss = 0.0;
  std::optional<double> accuracy;
  // Weight-solver accuracy estimate reported by the method (0 for fixed rules).
  double delta = 0.0;
  SimplexWeights weights = SimplexWeights::uniform(1);
  // Frank-Wolfe gap of w -> f(x - gamma G w) at the applied weights, with f
  // the closed-form target loss.
  std::optional<double> true_delta;
  // Validation loss after the applied update, and after the update that
  // averages the target group only.
  double phi_selected = 0.0;
  double phi_ideal = 0.0;
};

struct RoundMetrics {
  std::int64_t round = 0;
  std::vector<MethodRoundMetrics> methods;
};

struct TheoremReport {
  std::string method;
  bool applicable = false;
  std::string delta_source;
  std::int64_t rounds = 0;
  double model_step = 0.0;
  double smoothness = 0.0;
  double pl_constant = 0.0;
  double sigma_sq = 0.0;
  Index group_size = 0;
  double delta_bar = 0.0;
  double initial_gap = 0.0;
  bool step_condition = false;  // gamma <= 1 / (2L)

  double avg_grad_norm_sq = 0.0;
  double nonconvex_rhs = 0.0;
  bool nonconvex_holds = false;

  double final_gap = 0.0;
  double pl_contraction = 0.0;  // (1 - gamma mu)^T (f(x0) - f*)
  double pl_rhs = 0.0;
  bool pl_holds = false;
};

struct TheoremInput {
  std::string method;
  double initial_gap = 0.0;
  // ||grad f(x^t)||^2 for t = 0 .. T-1.
  std::vector<double> grad_norms_sq;
  double final_gap = 0.0;
  double model_step = 0.0;
  double smoothness = 0.0;
  double pl_constant = 0.0;
  double sigma_sq = 0.0;
  Index group_size = 0;
  double delta_bar = 0.0;
  std::string delta_source;
};

TheoremReport theorem_check(const TheoremInput& input);
TheoremReport theorem_not_applicable(const std::string& method);

class MetricSink {
 public:
  virtual ~MetricSink() = default;
  virtual void on_round(const RoundMetrics& metrics) = 0;
};

struct ExperimentResult {
  std::vector<RoundMetrics> rounds;
  std::vector<TheoremReport> theorems;
  std::vector<Vector> final_points;
  // Group-3 mean direction of the mean-estimation task (empty otherwise).
  Vector mixture_direction;
};

// The state of one experiment between rounds.
class Simulation {
 public:
  explicit Simulation(ExperimentSpec spec);
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  // Executes round t = completed_rounds() + 1.
  RoundMetrics run_round();

  std::int64_t completed_rounds() const { return round_; }
  const ExperimentSpec& spec() const { return spec_; }
  const Task& task() const { return *task_; }
  const std::vector<DatasetShard>& shards() const { return shards_; }
  const ValidationOracle& validation() const { return *validation_; }
  const Vector& mixture_direction() const { return mixture_; }
  const std::vector<Index>& ideal_set() const { return ideal_; }
  const Vector& point(std::size_t method) const { return points_.at(method); }
  // Metrics at x0, per method.
  const std::vector<MethodRoundMetrics>& initial_metrics() const { return initial_; }
  // Minibatch indices every client drew in the last round.
  const std::vector<std::vector<Index>>& last_batches() const { return batches_; }

 private:
  MethodRoundMetrics measure(const Vector& x) const;
  GradientSet collect(const Vector& x, std::size_t method) const;

  ExperimentSpec spec_;
  std::vector<ClientRole> roles_;
  std::unique_ptr<Task> task_;
  std::vector<DistributionSpec> specs_;
  std::vector<DatasetShard> shards_;
  std::unique_ptr<ValidationOracle> validation_;
  std::unique_ptr<LossOracle> exact_oracle_;
  std::optional<DatasetShard> test_;
  Vector mixture_;
  std::vector<Index> ideal_;
  std::vector<Aggregator> aggregators_;
  std::vector<Vector> points_;
  std::vector<MethodRoundMetrics> initial_;
  std::vector<std::vector<Index>> batches_;
  std::int64_t round_ = 0;
};

// Batch indices of `client` at `round`, shared by every method.
std::vector<Index> client_batch(std::uint64_t seed, Index client, std::int64_t round,
                                Index shard_size, Index batch_size);

ExperimentResult run_experiment(const ExperimentSpec& spec, MetricSink* sink = nullptr);

}  // namespace meritfed

#endif  // MERITFED_ENGINE_HPP_
