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

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>

#include "doctest.h"
#include "json.hpp"
#include "meritfed/config.hpp"
#include "meritfed/error.hpp"
#include "meritfed/report.hpp"

namespace mf = meritfed;
namespace fs = std::filesystem;

namespace {

std::string config_error(const std::string& text,
                         const std::vector<std::string>& overrides = {}) {
  try {
    mf::parse_config(text, overrides);
  } catch (const mf::Error& e) {
    CHECK(e.code() == mf::ErrorCode::kConfig);
    return e.what();
  }
  FAIL("expected a config error");
  return {};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const char* kTiny =
    "task = mean\n"
    "clients = 9\n"
    "groups = 2, 4, 3\n"
    "dim = 4\n"
    "shard_size = 50\n"
    "batch_size = 10\n"
    "validation_size = 40\n"
    "model_step = 0.01\n"
    "rounds = 6\n"
    "md_steps = 5\n"
    "smd_minibatch = 10\n"
    "methods = meritfed-md, meritfed-smd, sgd-full, fedadp, tawt, fedavg-3\n"
    "repeats = 2\n";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("meritfed-test-" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("mean-estimation presets carry the experiment constants") {
  const std::map<std::string, double> md_lr{
      {"mean-mu-0.001", 3.5}, {"mean-mu-0.01", 4.5}, {"mean-mu-0.1", 12.5}};
  for (const auto& [name, lr] : md_lr) {
    const auto c = mf::parse_config("", {}, name);
    CHECK(c.clients == 150);
    CHECK(c.groups == std::vector<mf::Index>{5, 95, 50});
    CHECK(c.dim == 10);
    CHECK(c.shard_size == 1000);
    CHECK(c.batch_size == 100);
    CHECK(c.validation_size == 1000);
    CHECK(c.model_step == 0.01);
    CHECK(c.settings.md_steps == 50);
    CHECK(c.settings.md_lr == lr);
  }
  CHECK(mf::parse_config("", {}, "mean-mu-0.001").mu == 0.001);
  CHECK(mf::parse_config("", {}, "mean-mu-0.1").mu == 0.1);
}

TEST_CASE("byzantine presets") {
  const std::map<std::string, std::tuple<mf::AttackKind, double>> attacks{
      {"byzantine-bf", {mf::AttackKind::kBitFlip, 0.0}},
      {"byzantine-rn", {mf::AttackKind::kRandomNoise, 1.0}},
      {"byzantine-ipm", {mf::AttackKind::kIpm, 0.1}},
      {"byzantine-alie", {mf::AttackKind::kAlie, 100.0}}};
  for (const auto& [name, attack] : attacks) {
    const auto c = mf::parse_config("", {}, name);
    CHECK(c.clients == 55);
    CHECK(c.byzantine == 50);
    CHECK(c.groups == std::vector<mf::Index>{5});
    CHECK(c.attack == std::get<0>(attack));
    CHECK(c.attack_param == std::get<1>(attack));
    CHECK(c.settings.md_steps == 10);
    CHECK(c.settings.md_lr == 3.5);
    CHECK(c.model_step == 0.01);
    CHECK(c.dim == 10);
    CHECK(c.shard_size == 1000);
  }
}

TEST_CASE("softmax presets") {
  for (const char* name : {"softmax-alpha-0.5", "softmax-alpha-0.99"}) {
    const auto c = mf::parse_config("", {}, std::string(name));
    CHECK(c.task == mf::TaskKind::kSoftmax);
    CHECK(c.clients == 20);
    CHECK(c.groups == std::vector<mf::Index>{1, 10, 9});
    CHECK(c.batch_size == 75);
    CHECK(c.settings.smd_minibatch == 90);
    CHECK(c.model_step == 0.01);
  }
  CHECK(mf::parse_config("", {}, std::string("softmax-alpha-0.99")).alpha == 0.99);
}

TEST_CASE("parse errors are anchored") {
  const std::string empty = config_error("");
  for (const auto& key : mf::required_keys()) CHECK(empty.find(key) != std::string::npos);

  CHECK(config_error("task = mean\nbogus = 1\n").find("line 2: unknown key 'bogus'") !=
        std::string::npos);
  CHECK(config_error("task = mean\n\n# comment\nrounds = abc\n").find("line 4") !=
        std::string::npos);
  const std::string sum = config_error(
      "task = mean\nclients = 10\ngroups = 5,4\nshard_size = 10\nbatch_size = 5\n"
      "model_step = 0.01\nrounds = 3\nmethods = sgd-full\n");
  CHECK(sum.find("line 2") != std::string::npos);
  CHECK(sum.find("sum to 9") != std::string::npos);
  CHECK(config_error("task = mean\nno equals sign\n").find("line 2") != std::string::npos);
  CHECK(config_error(kTiny, {"rounds=x"}).find("override 1") != std::string::npos);
  CHECK(config_error(kTiny, {"methods=sgd-full", "attack=nope"}).find("override 2") !=
        std::string::npos);
  CHECK(config_error(kTiny, {"methods=fedavg-12"}).find("sampled client count 12") != std::string::npos);
  CHECK_THROWS_AS(mf::parse_config("", {}, std::string("no-such-preset")), mf::Error);
}

TEST_CASE("overrides win over the preset") {
  const auto c = mf::parse_config("rounds = 10\n", {"md_lr=2", "methods=sgd-full"},
                                  std::string("mean-mu-0.1"));
  CHECK(c.rounds == 10);
  CHECK(c.settings.md_lr == 2.0);
  CHECK(c.methods == std::vector<std::string>{"sgd-full"});
  CHECK(c.preset == "mean-mu-0.1");
}

TEST_CASE("emit and parse round-trip") {
  for (const auto& name : mf::preset_names()) {
    const auto c = mf::parse_config("", {}, name);
    CHECK(mf::parse_config(mf::emit_config(c)) == c);
  }
  auto c = mf::parse_config(kTiny, {"mu=0.123456789012345", "zo_smoothing=3e-7"});
  c.output_dir = "some/dir";
  CHECK(mf::parse_config(mf::emit_config(c)) == c);
}

TEST_CASE("method names") {
  mf::MethodSettings s;
  s.md_lr = 2.5;
  s.md_steps = 7;
  s.smd_minibatch = 30;
  const auto md = mf::make_method("meritfed-md", s);
  CHECK(md.kind == mf::MethodKind::kMeritFed);
  CHECK(md.md.step_size == 2.5);
  CHECK(md.md.steps == 7);
  CHECK(md.md.minibatch == 0);
  CHECK(mf::make_method("meritfed-smd", s).md.minibatch == 30);
  CHECK(mf::make_method("meritfed-zo", s).md.estimator == mf::WeightEstimator::kZerothOrder);
  CHECK(mf::make_method("tawt", s).tawt_step == 2.5);
  CHECK(mf::make_method("fedavg-10", s).sampled_clients == 10);
  CHECK_THROWS_AS(mf::make_method("fedavg-x", s), mf::Error);
  CHECK_THROWS_AS(mf::make_method("krum", s), mf::Error);
}

TEST_CASE("run output") {
  const auto config = mf::parse_config(kTiny);
  const fs::path a = scratch("a");
  const fs::path b = scratch("b");
  mf::run_and_write(config, a);
  const auto results = mf::run_and_write(config, b);
  REQUIRE(results.size() == 2);
  for (const char* file : {"metrics.csv", "weights.csv", "theorem.csv", "manifest.json"}) {
    CHECK(fs::exists(a / file));
    CHECK(slurp(a / file) == slurp(b / file));
  }

  std::istringstream metrics(slurp(a / "metrics.csv"));
  std::string line;
  std::getline(metrics, line);
  CHECK(line == "seed,round,method,dist_sq,loss_gap,grad_norm_sq,val_loss,accuracy,delta");
  int rows = 0;
  while (std::getline(metrics, line)) ++rows;
  CHECK(rows == 2 * 6 * 6);

  std::istringstream weights(slurp(a / "weights.csv"));
  std::getline(weights, line);
  CHECK(line == "seed,round,method,client_index,weight");
  std::map<std::string, double> sums;
  std::map<std::string, int> counts;
  while (std::getline(weights, line)) {
    const auto cut = line.rfind(',');
    const auto client_cut = line.rfind(',', cut - 1);
    const std::string key = line.substr(0, client_cut);
    sums[key] += std::stod(line.substr(cut + 1));
    ++counts[key];
  }
  CHECK(sums.size() == 2 * 6 * 6);
  for (const auto& [key, sum] : sums) {
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    CHECK(counts[key] == 9);
  }

  const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  CHECK(manifest["version"] == mf::version_string());
  CHECK(manifest["config"]["rounds"] == "6");
  REQUIRE(manifest["runs"].size() == 2);
  for (std::size_t r = 0; r < 2; ++r) {
    CHECK(manifest["runs"][r]["seed"] == r);
    const auto e = manifest["runs"][r]["mixture_direction"].get<std::vector<double>>();
    REQUIRE(e.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(e[i] == results[r].mixture_direction[static_cast<mf::Index>(i)]);
  }
  CHECK(mf::parse_config(manifest["config_text"].get<std::string>()) == config);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("numbers use round-trip precision") {
  CHECK(mf::format_number(0.1) == "0.10000000000000001");
  CHECK(std::stod(mf::format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

}  // TEST_SUITE
