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

// Per-round client messages: honest minibatch gradients and Byzantine attacks.
// Attack functions only ever see the honest gradients of the current round;
// they have no access to the server's validation data or weights.

#ifndef MERITFED_CLIENTS_HPP_
#define MERITFED_CLIENTS_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meritfed/rng.hpp"
#include "meritfed/tasks.hpp"
#include "meritfed/types.hpp"

namespace meritfed {

enum class AttackKind { kBitFlip, kRandomNoise, kIpm, kAlie };

struct AttackSpec {
  AttackKind kind = AttackKind::kBitFlip;
  // sigma for random noise, epsilon for IPM, z for ALIE; unused for bit flip.
  double parameter = 0.0;
  // ALIE direction: mean - z * std when true, mean + z * std otherwise.
  bool alie_subtract = true;

  void validate() const;
  bool operator==(const AttackSpec&) const = default;
};

std::string attack_name(AttackKind kind);

struct ClientRole {
  int index = 0;
  // Data-distribution group (1 = target distribution).
  int group = 1;
  std::optional<AttackSpec> attack;

  bool byzantine() const { return attack.has_value(); }
};

// Index 0 must be an honest group-1 client.
void validate_roles(std::span<const ClientRole> roles);

// Honest clients in group 1, i.e. the set of clients sharing the target
// distribution.
std::vector<Index> target_group(std::span<const ClientRole> roles);

// Uniform minibatch of indices, drawn without replacement.
std::vector<Index> draw_batch(Index shard_size, Index batch_size, Rng& rng);

Vector honest_message(const Task& task, const Vector& x, const DatasetShard& shard,
                      Index batch_size, Rng& rng);

// Same, with the batch given explicitly.
Vector honest_message(const Task& task, const Vector& x, const DatasetShard& shard,
                      std::span<const Index> batch);

Vector attack_bf(const Vector& own_gradient);
Vector attack_rn(const Vector& own_gradient, double sigma, Rng& rng);

// Columns of `honest` are the honest gradients of the round.
Vector attack_ipm(const Matrix& honest, double epsilon);
Vector attack_alie(const Matrix& honest, double z, bool subtract = true);

}  // namespace meritfed

#endif  // MERITFED_CLIENTS_HPP_
