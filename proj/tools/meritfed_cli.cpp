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

// meritfed run --config <path> [--seed S] [--out DIR] [--preset NAME] [--set key=value ...]

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "meritfed/config.hpp"
#include "meritfed/error.hpp"
#include "meritfed/report.hpp"

namespace {

constexpr const char* kOutputEnv = "MERITFED_OUTPUT_DIR";

int run_command(const std::string& config_path, const std::optional<std::uint64_t>& seed,
                const std::string& out_flag, const std::optional<std::string>& preset,
                std::vector<std::string> overrides) {
  std::string text;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "meritfed: cannot read " << config_path << "\n";
      return 1;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }
  if (seed) overrides.push_back("seed=" + std::to_string(*seed));

  meritfed::RunConfig config = meritfed::parse_config(text, overrides, preset);
  std::filesystem::path dir;
  if (!out_flag.empty()) {
    dir = out_flag;
  } else if (!config.output_dir.empty()) {
    dir = config.output_dir;
  } else if (const char* env = std::getenv(kOutputEnv); env && *env) {
    dir = env;
  } else {
    dir = "meritfed-out";
  }

  const auto results = meritfed::run_and_write(config, dir);
  for (std::size_t r = 0; r < results.size(); ++r) {
    std::cout << "seed " << config.seed + r << ":";
    const auto& last = results[r].rounds.back();
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      const auto& x = last.methods[m];
      std::cout << " " << config.methods[m] << "=";
      if (x.dist_sq) std::cout << meritfed::format_number(*x.dist_sq);
      else if (x.accuracy) std::cout << meritfed::format_number(*x.accuracy);
      else std::cout << meritfed::format_number(x.val_loss);
    }
    std::cout << "\n";
  }
  std::cout << "wrote " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Merit-based federated aggregation experiments"};
  app.set_version_flag("--version", std::string(meritfed::version_string()));
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "Run an experiment and write CSV outputs");
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<std::string> preset;
  std::vector<std::string> overrides;
  run->add_option("--config", config_path, "Configuration file (key = value lines)")
      ->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Master seed of the first repeat");
  run->add_option("--out", out_dir, "Output directory (default: $MERITFED_OUTPUT_DIR)");
  run->add_option("--preset", preset, "Named preset applied before the file's keys");
  run->add_option("--set", overrides, "Override as key=value; repeatable");

  CLI::App* presets = app.add_subcommand("presets", "List preset names");
  CLI::App* show = app.add_subcommand("show", "Print the expanded configuration");
  std::string show_config;
  std::optional<std::string> show_preset;
  std::vector<std::string> show_overrides;
  show->add_option("--config", show_config, "Configuration file")->check(CLI::ExistingFile);
  show->add_option("--preset", show_preset, "Named preset");
  show->add_option("--set", show_overrides, "Override as key=value; repeatable");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (config_path.empty() && !preset) {
        std::cerr << "meritfed: run needs --config or --preset\n";
        return 2;
      }
      return run_command(config_path, seed, out_dir, preset, overrides);
    }
    if (*presets) {
      for (const std::string& p : meritfed::preset_names()) std::cout << p << "\n";
      return 0;
    }
    if (*show) {
      std::string text;
      if (!show_config.empty()) {
        std::ifstream in(show_config);
        std::ostringstream buf;
        buf << in.rdbuf();
        text = buf.str();
      }
      std::cout << meritfed::emit_config(
          meritfed::parse_config(text, show_overrides, show_preset));
      return 0;
    }
  } catch (const meritfed::Error& e) {
    std::cerr << "meritfed: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "meritfed: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
