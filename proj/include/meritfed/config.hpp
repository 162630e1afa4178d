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

// Text configuration for experiment runs: `key = value` lines, `#` comments,
// named presets, and expansion into an ExperimentSpec.

#ifndef MERITFED_CONFIG_HPP_
#define MERITFED_CONFIG_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "meritfed/aggregators.hpp"
#include "meritfed/clients.hpp"
#include "meritfed/engine.hpp"

namespace meritfed {

// Knobs shared by the method names listed under `methods`.
struct MethodSettings {
  double md_lr = 3.5;
  int md_steps = 50;
  Index smd_minibatch = 100;
  double zo_smoothing = 1e-4;
  bool md_warm_start = true;
  double fedadp_alpha = 5.0;
  AngleSmoothing fedadp_smoothing = AngleSmoothing::kRunningMean;
  double tawt_lr = 0.0;  // 0 reuses md_lr
  double tawt_scale = 1.0;
  TawtMeasure tawt_measure = TawtMeasure::kCosine;

  bool operator==(const MethodSettings&) const = default;
};

struct RunConfig {
  std::string preset;

  TaskKind task = TaskKind::kMeanEstimation;
  Index clients = 0;
  std::vector<Index> groups;
  Index byzantine = 0;
  std::optional<AttackKind> attack;
  double attack_param = 0.0;
  bool alie_subtract = true;

  Index dim = 10;
  double mu = 0.1;
  double alpha = 0.5;
  Index classes = 10;
  Index features = 10;
  Index validation_per_class = 300;
  Index test_per_class = 1000;

  Index shard_size = 0;
  Index batch_size = 0;
  double model_step = 0.0;
  std::int64_t rounds = 0;
  ValidationMode validation_mode = ValidationMode::kExtraValidation;
  Index validation_size = 1000;
  bool exact_validation = false;
  bool noiseless = false;
  int threads = 1;

  std::vector<std::string> methods;
  MethodSettings settings;

  std::uint64_t seed = 0;
  int repeats = 3;
  std::string output_dir;

  bool operator==(const RunConfig&) const = default;
};

// Keys that must be set by the file, the preset or an override.
const std::vector<std::string>& required_keys();
const std::vector<std::string>& preset_names();

// Preset values are applied first, then the file's keys, then `overrides`
// (each "key=value"). A `preset` passed here wins over one named in the file.
// Errors carry the offending line ("line 3: ...") or override position.
RunConfig parse_config(std::string_view text,
                       const std::vector<std::string>& overrides = {},
                       const std::optional<std::string>& preset = std::nullopt);

// Every key with its current value; parse_config(emit_config(c)) == c.
std::string emit_config(const RunConfig& config);

MethodConfig make_method(const std::string& name, const MethodSettings& settings);
ExperimentSpec to_experiment(const RunConfig& config, std::uint64_t seed);

}  // namespace meritfed

#endif  // MERITFED_CONFIG_HPP_
