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

#include "meritfed/rng.hpp"

#include <algorithm>
#include <string>

#include "meritfed/error.hpp"

namespace meritfed {
namespace {

// SplitMix64 finalizer.
std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, Stream tag,
                       std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ static_cast<std::uint64_t>(tag));
  for (std::uint64_t k : keys) h = splitmix(h ^ k);
  return h;
}

Rng make_stream(std::uint64_t seed, Stream tag,
                std::initializer_list<std::uint64_t> keys) {
  return Rng(mix_seed(seed, tag, keys));
}

Vector standard_normal(Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(n);
  for (Index i = 0; i < n; ++i) z[i] = normal(rng);
  return z;
}

Vector unit_sphere(Index n, Rng& rng) {
  if (n < 1) throw Error(ErrorCode::kInvalidDimension, "sphere dimension must be >= 1");
  for (;;) {
    Vector z = standard_normal(n, rng);
    const double norm = z.norm();
    if (norm > 0.0) return z / norm;
  }
}

std::vector<Index> sample_without_replacement(Index population, Index count,
                                              Rng& rng) {
  if (count < 0 || count > population) {
    throw Error(ErrorCode::kConfig, "cannot draw " + std::to_string(count) +
                                        " of " + std::to_string(population) +
                                        " without replacement");
  }
  // Floyd's algorithm: `count` draws regardless of the population size.
  std::vector<char> taken(static_cast<std::size_t>(population), 0);
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Index j = population - count; j < population; ++j) {
    const Index t = std::uniform_int_distribution<Index>(0, j)(rng);
    const Index v = taken[static_cast<std::size_t>(t)] ? j : t;
    taken[static_cast<std::size_t>(v)] = 1;
    out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace meritfed
