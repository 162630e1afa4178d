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

#include "meritfed/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include "meritfed/error.hpp"

namespace meritfed {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_subset(const DatasetShard& data, const Subset& subset) {
  if (data.size() == 0) throw Error(ErrorCode::kEmptyBatch, "dataset is empty");
  if (!subset) return;
  if (subset->empty()) throw Error(ErrorCode::kEmptyBatch, "batch is empty");
  for (Index i : *subset) {
    if (i < 0 || i >= data.size()) {
      throw Error(ErrorCode::kShape, "sample index " + std::to_string(i) +
                                         " out of range for " +
                                         std::to_string(data.size()) + " samples");
    }
  }
}

Index subset_size(const DatasetShard& data, const Subset& subset) {
  return subset ? static_cast<Index>(subset->size()) : data.size();
}

Index subset_at(const Subset& subset, Index k) {
  return subset ? (*subset)[static_cast<std::size_t>(k)] : k;
}

int draw_from(const std::vector<int>& classes, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, classes.size() - 1);
  return classes[pick(rng)];
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

double KnownObjective::value(const Vector& x) const {
  return (x - optimum).squaredNorm() + optimal_value;
}

Vector KnownObjective::gradient(const Vector& x) const { return 2.0 * (x - optimum); }

double KnownObjective::gradient_variance(Index batch_size) const {
  return 4.0 * static_cast<double>(optimum.size()) / static_cast<double>(batch_size);
}

double Task::loss(const Vector& x, const DatasetShard& data, Subset subset) const {
  return loss_grad(x, data, subset).loss;
}

Vector Task::expected_gradient(const Vector&, const DistributionSpec&) const {
  throw Error(ErrorCode::kUnsupportedTask,
              "task '" + name() + "' has no closed-form expected gradient");
}

// ---- mean estimation ------------------------------------------------------

double mean_loss(const Vector& x, const Vector& sample) {
  if (x.size() != sample.size()) {
    throw Error(ErrorCode::kShape, "point and sample differ in dimension");
  }
  return (x - sample).squaredNorm();
}

Vector mean_grad(const Vector& x, const Matrix& batch) {
  if (batch.cols() == 0) throw Error(ErrorCode::kEmptyBatch, "batch is empty");
  if (batch.rows() != x.size()) {
    throw Error(ErrorCode::kShape, "point and samples differ in dimension");
  }
  return 2.0 * (x - batch.rowwise().mean());
}

std::pair<Vector, double> mean_true_optimum(const DistributionSpec& spec) {
  if (spec.kind != DistributionKind::kGaussianMean) {
    throw Error(ErrorCode::kUnsupportedTask,
                "closed-form optimum exists only for the Gaussian mean task");
  }
  return {spec.center, static_cast<double>(spec.center.size())};
}

MeanEstimationTask::MeanEstimationTask(const DistributionSpec& target) {
  auto [optimum, value] = mean_true_optimum(target);
  if (optimum.size() < 1) throw Error(ErrorCode::kInvalidDimension, "dimension must be >= 1");
  objective_.optimum = std::move(optimum);
  objective_.optimal_value = value;
}

LossGrad MeanEstimationTask::loss_grad(const Vector& x, const DatasetShard& data,
                                       Subset subset) const {
  check_subset(data, subset);
  if (x.size() != data.dim()) {
    throw Error(ErrorCode::kShape, "point and samples differ in dimension");
  }
  const Index m = subset_size(data, subset);
  const double inv = 1.0 / static_cast<double>(m);
  if (!subset) {
    // mean |x - s|^2 = |x|^2 - 2 <x, mean s> + mean |s|^2, all contiguous reductions.
    const Vector mean = data.features * Vector::Constant(m, inv);
    const double loss = x.squaredNorm() - 2.0 * x.dot(mean) + data.features.squaredNorm() * inv;
    return LossGrad{loss, 2.0 * (x - mean)};
  }
  Vector sum = Vector::Zero(x.size());
  double loss = 0.0;
  for (Index k = 0; k < m; ++k) {
    const auto sample = data.features.col(subset_at(subset, k));
    loss += (x - sample).squaredNorm();
    sum += sample;
  }
  return LossGrad{loss * inv, 2.0 * (x - sum * inv)};
}

double MeanEstimationTask::loss(const Vector& x, const DatasetShard& data,
                                Subset subset) const {
  check_subset(data, subset);
  if (x.size() != data.dim()) {
    throw Error(ErrorCode::kShape, "point and samples differ in dimension");
  }
  const Index m = subset_size(data, subset);
  if (!subset) return loss_grad(x, data, subset).loss;
  double loss = 0.0;
  for (Index k = 0; k < m; ++k) {
    loss += (x - data.features.col(subset_at(subset, k))).squaredNorm();
  }
  return loss / static_cast<double>(m);
}

Vector MeanEstimationTask::expected_gradient(const Vector& x,
                                             const DistributionSpec& spec) const {
  if (spec.kind != DistributionKind::kGaussianMean) {
    throw Error(ErrorCode::kUnsupportedTask, "expected gradient needs a Gaussian spec");
  }
  if (spec.center.size() != x.size()) {
    throw Error(ErrorCode::kShape, "point and distribution differ in dimension");
  }
  return 2.0 * (x - spec.center);
}

DatasetShard generate_gaussian_shard(const DistributionSpec& spec, Index count,
                                     int owner, Rng& rng) {
  if (spec.kind != DistributionKind::kGaussianMean) {
    throw Error(ErrorCode::kUnsupportedTask, "Gaussian shard needs a Gaussian spec");
  }
  DatasetShard shard;
  shard.owner = owner;
  shard.group = spec.group_id;
  shard.features.resize(spec.center.size(), count);
  for (Index k = 0; k < count; ++k) {
    shard.features.col(k) = spec.center + standard_normal(spec.center.size(), rng);
  }
  return shard;
}

// ---- softmax ----------------------------------------------------------------

LossGrad softmax_loss_grad(const Vector& theta, const DatasetShard& batch,
                           Index classes, Subset subset) {
  check_subset(batch, subset);
  const Index p = batch.dim();
  if (theta.size() != classes * p) {
    throw Error(ErrorCode::kShape, "parameter size " + std::to_string(theta.size()) +
                                       " != classes x features " +
                                       std::to_string(classes * p));
  }
  if (!batch.labeled()) throw Error(ErrorCode::kData, "softmax task needs labels");

  const Eigen::Map<const RowMajor> weights(theta.data(), classes, p);
  RowMajor grad = RowMajor::Zero(classes, p);
  Vector logits(classes);
  double loss = 0.0;
  const Index m = subset_size(batch, subset);
  for (Index k = 0; k < m; ++k) {
    const Index s = subset_at(subset, k);
    const int label = batch.labels[static_cast<std::size_t>(s)];
    if (label < 0 || label >= classes) {
      throw Error(ErrorCode::kData, "label " + std::to_string(label) +
                                        " outside the class set");
    }
    const auto xi = batch.features.col(s);
    logits.noalias() = weights * xi;
    const double top = logits.maxCoeff();
    logits = (logits.array() - top).exp();
    const double total = logits.sum();
    loss += std::log(total) - std::log(logits[label]);
    logits /= total;
    logits[label] -= 1.0;
    grad.noalias() += logits * xi.transpose();
  }
  const double inv = 1.0 / static_cast<double>(m);
  Vector flat = Eigen::Map<const Vector>(grad.data(), grad.size()) * inv;
  return LossGrad{loss * inv, std::move(flat)};
}

SoftmaxTask::SoftmaxTask(Index classes, Index features)
    : classes_(classes), features_(features) {
  if (classes < 2 || features < 1) {
    throw Error(ErrorCode::kInvalidDimension, "softmax task needs >= 2 classes and >= 1 feature");
  }
}

LossGrad SoftmaxTask::loss_grad(const Vector& x, const DatasetShard& data,
                                Subset subset) const {
  return softmax_loss_grad(x, data, classes_, subset);
}

std::optional<double> SoftmaxTask::accuracy(const Vector& x,
                                            const DatasetShard& data) const {
  if (data.size() == 0 || !data.labeled()) return std::nullopt;
  if (x.size() != classes_ * data.dim()) {
    throw Error(ErrorCode::kShape, "parameter size does not match the data");
  }
  const Eigen::Map<const RowMajor> weights(x.data(), classes_, data.dim());
  const Matrix logits = weights * data.features;
  Index correct = 0;
  for (Index s = 0; s < data.size(); ++s) {
    Index best = 0;
    logits.col(s).maxCoeff(&best);
    if (best == data.labels[static_cast<std::size_t>(s)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

Matrix softmax_class_centers(Index classes, Index features, double distance) {
  if (features < classes) {
    throw Error(ErrorCode::kConfig, "need at least as many features as classes");
  }
  Matrix centers = Matrix::Zero(features, classes);
  const double scale = distance / std::sqrt(2.0);
  for (Index k = 0; k < classes; ++k) centers(k, k) = scale;
  return centers;
}

DatasetShard generate_cluster_shard(const DistributionSpec& spec,
                                    const Matrix& class_centers, Index count,
                                    int owner, Rng& rng) {
  if (spec.kind != DistributionKind::kSoftmaxCluster) {
    throw Error(ErrorCode::kUnsupportedTask, "cluster shard needs a softmax spec");
  }
  if (spec.primary_classes.empty() ||
      (spec.mixing < 1.0 && spec.secondary_classes.empty())) {
    throw Error(ErrorCode::kConfig, "cluster spec has an empty class set");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DatasetShard shard;
  shard.owner = owner;
  shard.group = spec.group_id;
  shard.features.resize(class_centers.rows(), count);
  shard.labels.resize(static_cast<std::size_t>(count));
  for (Index k = 0; k < count; ++k) {
    const bool primary = spec.mixing >= 1.0 || unit(rng) < spec.mixing;
    const int label = draw_from(primary ? spec.primary_classes : spec.secondary_classes, rng);
    shard.labels[static_cast<std::size_t>(k)] = label;
    shard.features.col(k) =
        class_centers.col(label) + standard_normal(class_centers.rows(), rng);
  }
  return shard;
}

namespace {

DatasetShard balanced_shard(const std::vector<int>& classes, Index per_class,
                            const Matrix& centers, int group, Rng& rng) {
  DatasetShard shard;
  shard.group = group;
  const Index total = per_class * static_cast<Index>(classes.size());
  shard.features.resize(centers.rows(), total);
  shard.labels.reserve(static_cast<std::size_t>(total));
  Index col = 0;
  for (int label : classes) {
    for (Index k = 0; k < per_class; ++k, ++col) {
      shard.labels.push_back(label);
      shard.features.col(col) = centers.col(label) + standard_normal(centers.rows(), rng);
    }
  }
  return shard;
}

void check_class_sets(const SoftmaxSplit& split) {
  std::set<int> seen;
  for (const auto* set : {&split.target_classes, &split.mixed_classes,
                          &split.disjoint_classes}) {
    if (set->empty()) throw Error(ErrorCode::kConfig, "empty class set");
    for (int c : *set) {
      if (c < 0 || c >= split.classes) {
        throw Error(ErrorCode::kConfig, "class " + std::to_string(c) + " out of range");
      }
      if (!seen.insert(c).second) {
        throw Error(ErrorCode::kConfig,
                    "class " + std::to_string(c) + " appears in two class sets");
      }
    }
  }
}

}  // namespace

SoftmaxData softmax_task_generate(const SoftmaxSplit& split, std::uint64_t seed) {
  if (!(split.alpha > 0.0 && split.alpha <= 1.0)) {
    throw Error(ErrorCode::kConfig, "mixing alpha must lie in (0, 1]");
  }
  if (split.group_sizes.size() != 3 || split.group_sizes[0] < 1) {
    throw Error(ErrorCode::kConfig, "softmax split needs three groups with a target client");
  }
  if (split.shard_size < 1) throw Error(ErrorCode::kConfig, "shard size must be >= 1");
  check_class_sets(split);

  SoftmaxData data;
  data.class_centers =
      softmax_class_centers(split.classes, split.features, split.center_distance);

  DistributionSpec target{DistributionKind::kSoftmaxCluster, {}, split.target_classes, {}, 1.0, 1};
  DistributionSpec mixed{DistributionKind::kSoftmaxCluster, {}, split.target_classes,
                         split.mixed_classes, split.alpha, 2};
  DistributionSpec disjoint{DistributionKind::kSoftmaxCluster, {}, split.disjoint_classes,
                            {}, 1.0, 3};
  const DistributionSpec* groups[] = {&target, &mixed, &disjoint};

  int owner = 0;
  for (std::size_t g = 0; g < 3; ++g) {
    for (Index c = 0; c < split.group_sizes[g]; ++c, ++owner) {
      Rng rng = make_stream(seed, Stream::kShard, {static_cast<std::uint64_t>(owner)});
      data.shards.push_back(generate_cluster_shard(*groups[g], data.class_centers,
                                                   split.shard_size, owner, rng));
      data.specs.push_back(*groups[g]);
    }
  }
  Rng val_rng = make_stream(seed, Stream::kValidation);
  data.validation = balanced_shard(split.target_classes, split.validation_per_class,
                                   data.class_centers, 1, val_rng);
  Rng test_rng = make_stream(seed, Stream::kTest);
  data.test = balanced_shard(split.target_classes, split.test_per_class,
                             data.class_centers, 1, test_rng);
  return data;
}

// ---- validation -------------------------------------------------------------

ValidationOracle::ValidationOracle(const Task& task, DatasetShard data,
                                   ValidationMode mode)
    : task_(&task), data_(std::move(data)), mode_(mode) {
  if (data_.size() == 0) throw Error(ErrorCode::kConfig, "validation set is empty");
}

double ValidationOracle::loss(const Vector& y, Subset subset) const {
  return task_->loss(y, data_, subset);
}

LossGrad ValidationOracle::loss_grad(const Vector& y, Subset subset) const {
  return task_->loss_grad(y, data_, subset);
}

LossGrad validation_eval(const ValidationOracle& oracle, const Vector& x,
                         Index minibatch, Rng& rng) {
  if (minibatch < 0 || minibatch > oracle.sample_count()) {
    throw Error(ErrorCode::kConfig, "validation minibatch exceeds the validation set");
  }
  // Drawing every sample without replacement selects the full set.
  if (minibatch == 0 || minibatch == oracle.sample_count()) return oracle.loss_grad(x);
  const std::vector<Index> batch =
      sample_without_replacement(oracle.sample_count(), minibatch, rng);
  return oracle.loss_grad(x, std::span<const Index>(batch));
}

// ---- shard files --------------------------------------------------------------

void write_shard(std::ostream& out, const DatasetShard& shard) {
  out << "dim=" << shard.dim() << ",count=" << shard.size() << ",group=" << shard.group
      << ",labeled=" << (shard.labeled() ? 1 : 0) << '\n';
  for (Index s = 0; s < shard.size(); ++s) {
    for (Index j = 0; j < shard.dim(); ++j) {
      if (j > 0) out << ',';
      out << format_double(shard.features(j, s));
    }
    if (shard.labeled()) out << ',' << shard.labels[static_cast<std::size_t>(s)];
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "failed to write shard");
}

DatasetShard read_shard(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw Error(ErrorCode::kIo, "missing shard header");
  long long dim = -1, count = -1, group = 0;
  int labeled = 0;
  if (std::sscanf(header.c_str(), "dim=%lld,count=%lld,group=%lld,labeled=%d", &dim,
                  &count, &group, &labeled) != 4 ||
      dim < 1 || count < 0) {
    throw Error(ErrorCode::kData, "malformed shard header: " + header);
  }
  DatasetShard shard;
  shard.group = static_cast<int>(group);
  shard.features.resize(dim, count);
  if (labeled) shard.labels.resize(static_cast<std::size_t>(count));
  std::string line;
  for (long long s = 0; s < count; ++s) {
    if (!std::getline(in, line)) {
      throw Error(ErrorCode::kData, "shard ends after " + std::to_string(s) + " rows");
    }
    std::istringstream row(line);
    std::string field;
    for (long long j = 0; j < dim + (labeled ? 1 : 0); ++j) {
      if (!std::getline(row, field, ',')) {
        throw Error(ErrorCode::kData, "row " + std::to_string(s + 2) + " is too short");
      }
      try {
        if (j < dim) {
          shard.features(j, s) = std::stod(field);
        } else {
          shard.labels[static_cast<std::size_t>(s)] = std::stoi(field);
        }
      } catch (const std::exception&) {
        throw Error(ErrorCode::kData, "row " + std::to_string(s + 2) + ": bad value '" +
                                          field + "'");
      }
    }
  }
  return shard;
}

}  // namespace meritfed
