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

#ifndef MERITFED_RNG_HPP_
#define MERITFED_RNG_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "meritfed/types.hpp"

namespace meritfed {

using Rng = std::mt19937_64;

// Purpose tags for keyed random streams. Every consumer of randomness derives
// its own engine from (master seed, tag, keys), so draws never depend on the
// order in which other consumers ran.
enum class Stream : std::uint64_t {
  kShard = 1,
  kBatch = 2,
  kAttack = 3,
  kValidation = 4,
  kMirrorDescent = 5,
  kSampling = 6,
  kMixture = 7,
  kTest = 8,
};

std::uint64_t mix_seed(std::uint64_t seed, Stream tag,
                       std::initializer_list<std::uint64_t> keys);

Rng make_stream(std::uint64_t seed, Stream tag,
                std::initializer_list<std::uint64_t> keys = {});

Vector standard_normal(Index n, Rng& rng);

// Uniform direction on the unit Euclidean sphere in R^n.
Vector unit_sphere(Index n, Rng& rng);

// `count` distinct indices from [0, population), in increasing order.
std::vector<Index> sample_without_replacement(Index population, Index count,
                                              Rng& rng);

}  // namespace meritfed

#endif  // MERITFED_RNG_HPP_
