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

#include "meritfed/clients.hpp"

#include <cmath>

#include "meritfed/error.hpp"

namespace meritfed {

void AttackSpec::validate() const {
  switch (kind) {
    case AttackKind::kBitFlip:
      return;
    case AttackKind::kRandomNoise:
      if (!(parameter >= 0.0)) throw Error(ErrorCode::kConfig, "RN sigma must be >= 0");
      return;
    case AttackKind::kIpm:
      if (!(parameter > 0.0)) throw Error(ErrorCode::kConfig, "IPM epsilon must be > 0");
      return;
    case AttackKind::kAlie:
      if (!(parameter > 0.0)) throw Error(ErrorCode::kConfig, "ALIE z must be > 0");
      return;
  }
}

std::string attack_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::kBitFlip:
      return "bf";
    case AttackKind::kRandomNoise:
      return "rn";
    case AttackKind::kIpm:
      return "ipm";
    case AttackKind::kAlie:
      return "alie";
  }
  return "unknown";
}

void validate_roles(std::span<const ClientRole> roles) {
  if (roles.empty()) throw Error(ErrorCode::kConfig, "no clients");
  if (roles.front().byzantine() || roles.front().group != 1) {
    throw Error(ErrorCode::kConfig, "client 0 must be the honest target client");
  }
  for (std::size_t i = 0; i < roles.size(); ++i) {
    if (roles[i].index != static_cast<int>(i)) {
      throw Error(ErrorCode::kConfig, "client roles must be indexed 0..n-1 in order");
    }
    if (roles[i].attack) roles[i].attack->validate();
  }
}

std::vector<Index> target_group(std::span<const ClientRole> roles) {
  std::vector<Index> out;
  for (const ClientRole& r : roles) {
    if (!r.byzantine() && r.group == 1) out.push_back(r.index);
  }
  return out;
}

std::vector<Index> draw_batch(Index shard_size, Index batch_size, Rng& rng) {
  if (batch_size < 1) throw Error(ErrorCode::kConfig, "batch size must be >= 1");
  if (batch_size > shard_size) {
    throw Error(ErrorCode::kConfig, "batch size " + std::to_string(batch_size) +
                                        " exceeds shard size " + std::to_string(shard_size));
  }
  return sample_without_replacement(shard_size, batch_size, rng);
}

Vector honest_message(const Task& task, const Vector& x, const DatasetShard& shard,
                      Index batch_size, Rng& rng) {
  const std::vector<Index> batch = draw_batch(shard.size(), batch_size, rng);
  return honest_message(task, x, shard, batch);
}

Vector honest_message(const Task& task, const Vector& x, const DatasetShard& shard,
                      std::span<const Index> batch) {
  if (static_cast<Index>(batch.size()) == shard.size()) {
    return task.loss_grad(x, shard).grad;
  }
  return task.loss_grad(x, shard, batch).grad;
}

Vector attack_bf(const Vector& own_gradient) { return -own_gradient; }

Vector attack_rn(const Vector& own_gradient, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw Error(ErrorCode::kConfig, "RN sigma must be >= 0");
  if (sigma == 0.0) return own_gradient;
  return own_gradient + sigma * standard_normal(own_gradient.size(), rng);
}

Vector attack_ipm(const Matrix& honest, double epsilon) {
  if (honest.cols() < 1) {
    throw Error(ErrorCode::kAttackInput, "IPM needs at least one honest gradient");
  }
  return -epsilon * honest.rowwise().mean();
}

Vector attack_alie(const Matrix& honest, double z, bool subtract) {
  if (honest.cols() < 2) {
    throw Error(ErrorCode::kAttackInput, "ALIE needs at least two honest gradients");
  }
  const Vector mean = honest.rowwise().mean();
  const double denom = static_cast<double>(honest.cols() - 1);
  const Vector stddev =
      ((honest.colwise() - mean).array().square().rowwise().sum() / denom).sqrt().matrix();
  return subtract ? Vector(mean - z * stddev) : Vector(mean + z * stddev);
}

}  // namespace meritfed
