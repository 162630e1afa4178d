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

// Objectives, synthetic client data and validation oracles for the two
// desk-scale tasks: mean estimation and a Gaussian-cluster softmax classifier.

#ifndef MERITFED_TASKS_HPP_
#define MERITFED_TASKS_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "meritfed/rng.hpp"
#include "meritfed/simplex.hpp"
#include "meritfed/types.hpp"

namespace meritfed {

// Samples are stored column-wise: features is (feature dim) x (count).
// `labels` is empty for unlabeled (mean-estimation) data.
struct DatasetShard {
  Matrix features;
  std::vector<int> labels;
  int owner = -1;
  int group = 0;

  Index size() const { return features.cols(); }
  Index dim() const { return features.rows(); }
  bool labeled() const { return !labels.empty(); }
};

enum class DistributionKind { kGaussianMean, kSoftmaxCluster };

struct DistributionSpec {
  DistributionKind kind = DistributionKind::kGaussianMean;
  // Gaussian mean with identity covariance.
  Vector center;
  // Softmax clusters: `mixing` of the labels come from primary_classes, the
  // rest from secondary_classes, each uniformly.
  std::vector<int> primary_classes;
  std::vector<int> secondary_classes;
  double mixing = 1.0;
  int group_id = 1;
};

// Closed-form population objective, known for the mean-estimation task:
// f(x) = ||x - c||^2 + d.
struct KnownObjective {
  Vector optimum;
  double optimal_value = 0.0;
  double smoothness = 2.0;  // L
  double pl_constant = 2.0;  // mu

  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  // Variance of a size-b minibatch gradient of i.i.d. samples: 4 d / b.
  double gradient_variance(Index batch_size) const;
};

class Task {
 public:
  virtual ~Task() = default;

  virtual std::string name() const = 0;
  virtual Index model_dim() const = 0;
  virtual Index feature_dim() const = 0;

  // Mean loss and gradient over `subset` of `data` (all samples when nullopt).
  virtual LossGrad loss_grad(const Vector& x, const DatasetShard& data,
                             Subset subset = std::nullopt) const = 0;
  virtual double loss(const Vector& x, const DatasetShard& data,
                      Subset subset = std::nullopt) const;

  // Exact gradient of the population loss of `spec` (noise-free client).
  virtual Vector expected_gradient(const Vector& x,
                                   const DistributionSpec& spec) const;

  virtual const KnownObjective* known_objective() const { return nullptr; }
  virtual std::optional<double> accuracy(const Vector& /*x*/,
                                         const DatasetShard& /*data*/) const {
    return std::nullopt;
  }
};

// ---- mean estimation ------------------------------------------------------

double mean_loss(const Vector& x, const Vector& sample);

// 2 (x - mean of batch columns).
Vector mean_grad(const Vector& x, const Matrix& batch);

std::pair<Vector, double> mean_true_optimum(const DistributionSpec& spec);

class MeanEstimationTask final : public Task {
 public:
  // `target` is the target client's distribution D1.
  explicit MeanEstimationTask(const DistributionSpec& target);

  std::string name() const override { return "mean"; }
  Index model_dim() const override { return objective_.optimum.size(); }
  Index feature_dim() const override { return objective_.optimum.size(); }

  LossGrad loss_grad(const Vector& x, const DatasetShard& data,
                     Subset subset = std::nullopt) const override;
  double loss(const Vector& x, const DatasetShard& data,
              Subset subset = std::nullopt) const override;
  Vector expected_gradient(const Vector& x,
                           const DistributionSpec& spec) const override;
  const KnownObjective* known_objective() const override { return &objective_; }

 private:
  KnownObjective objective_;
};

DatasetShard generate_gaussian_shard(const DistributionSpec& spec, Index count,
                                     int owner, Rng& rng);

// ---- softmax classification analog ----------------------------------------

// theta is a classes x features weight matrix flattened row-major.
LossGrad softmax_loss_grad(const Vector& theta, const DatasetShard& batch,
                           Index classes, Subset subset = std::nullopt);

class SoftmaxTask final : public Task {
 public:
  SoftmaxTask(Index classes, Index features);

  std::string name() const override { return "softmax"; }
  Index model_dim() const override { return classes_ * features_; }
  Index feature_dim() const override { return features_; }
  Index classes() const { return classes_; }

  LossGrad loss_grad(const Vector& x, const DatasetShard& data,
                     Subset subset = std::nullopt) const override;
  std::optional<double> accuracy(const Vector& x,
                                 const DatasetShard& data) const override;

 private:
  Index classes_;
  Index features_;
};

struct SoftmaxSplit {
  // Client counts of the target group (first client is the target), the
  // mixed group and the disjoint group.
  std::vector<Index> group_sizes{1, 10, 9};
  double alpha = 0.5;
  Index classes = 10;
  Index features = 10;
  Index shard_size = 1000;
  Index validation_per_class = 300;
  Index test_per_class = 1000;
  std::vector<int> target_classes{0, 1, 2};
  std::vector<int> mixed_classes{3, 4, 5};
  std::vector<int> disjoint_classes{6, 7, 8, 9};
  // Distance between any two class centers.
  double center_distance = 4.0;
};

struct SoftmaxData {
  std::vector<DatasetShard> shards;
  std::vector<DistributionSpec> specs;
  DatasetShard validation;
  DatasetShard test;
  Matrix class_centers;  // features x classes
};

SoftmaxData softmax_task_generate(const SoftmaxSplit& split, std::uint64_t seed);

// Class centers sqrt(D^2/2) * e_k: pairwise distance D and equal norms.
Matrix softmax_class_centers(Index classes, Index features, double distance);

DatasetShard generate_cluster_shard(const DistributionSpec& spec,
                                    const Matrix& class_centers, Index count,
                                    int owner, Rng& rng);

// ---- validation -------------------------------------------------------------

enum class ValidationMode { kExtraValidation, kReuseTrain };

// fhat over a target-distribution dataset.
class ValidationOracle final : public LossOracle {
 public:
  ValidationOracle(const Task& task, DatasetShard data, ValidationMode mode);

  Index sample_count() const override { return data_.size(); }
  double loss(const Vector& y, Subset subset = std::nullopt) const override;
  LossGrad loss_grad(const Vector& y, Subset subset = std::nullopt) const override;

  const DatasetShard& data() const { return data_; }
  ValidationMode mode() const { return mode_; }

 private:
  const Task* task_;
  DatasetShard data_;
  ValidationMode mode_;
};

// Full-set value and gradient when minibatch == 0, otherwise a minibatch drawn
// without replacement from `rng`.
LossGrad validation_eval(const ValidationOracle& oracle, const Vector& x,
                         Index minibatch, Rng& rng);

// ---- shard files --------------------------------------------------------------

// Text format: header line "dim=<d>,count=<m>,group=<g>,labeled=<0|1>", then
// one comma-separated row per sample (features, then label if labeled), with
// 17 significant digits.
void write_shard(std::ostream& out, const DatasetShard& shard);
DatasetShard read_shard(std::istream& in);

}  // namespace meritfed

#endif  // MERITFED_TASKS_HPP_
