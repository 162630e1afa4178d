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

#include "meritfed/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>

#include "meritfed/error.hpp"

namespace meritfed {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    std::string t = trim(item);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

// Shortest text that parses back to the same double.
std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <typename Int>
Int parse_int(const std::string& v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw Error(ErrorCode::kConfig, "expected an integer, got '" + v + "'");
  }
  return out;
}

double parse_double(const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw Error(ErrorCode::kConfig, "expected a number, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::kConfig, "expected true or false, got '" + v + "'");
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

std::string task_text(TaskKind k) {
  return k == TaskKind::kMeanEstimation ? "mean" : "softmax";
}

using Setter = std::function<void(RunConfig&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct KeyDef {
  std::string name;
  Setter set;
  Getter get;
};

const std::vector<KeyDef>& key_defs() {
  static const std::vector<KeyDef> defs = [] {
    std::vector<KeyDef> d;
    auto add = [&d](std::string name, Setter s, Getter g) {
      d.push_back({std::move(name), std::move(s), std::move(g)});
    };
    add("task",
        [](RunConfig& c, const std::string& v) {
          if (v == "mean") c.task = TaskKind::kMeanEstimation;
          else if (v == "softmax") c.task = TaskKind::kSoftmax;
          else throw Error(ErrorCode::kConfig, "task must be mean or softmax, got '" + v + "'");
        },
        [](const RunConfig& c) { return task_text(c.task); });
    add("clients", [](RunConfig& c, const std::string& v) { c.clients = parse_int<Index>(v); },
        [](const RunConfig& c) { return std::to_string(c.clients); });
    add("groups",
        [](RunConfig& c, const std::string& v) {
          c.groups.clear();
          for (const std::string& item : split_list(v)) c.groups.push_back(parse_int<Index>(item));
        },
        [](const RunConfig& c) {
          std::string s;
          for (std::size_t i = 0; i < c.groups.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(c.groups[i]);
          }
          return s;
        });
    add("byzantine", [](RunConfig& c, const std::string& v) { c.byzantine = parse_int<Index>(v); },
        [](const RunConfig& c) { return std::to_string(c.byzantine); });
    add("attack",
        [](RunConfig& c, const std::string& v) {
          if (v == "none") c.attack.reset();
          else if (v == "bf") c.attack = AttackKind::kBitFlip;
          else if (v == "rn") c.attack = AttackKind::kRandomNoise;
          else if (v == "ipm") c.attack = AttackKind::kIpm;
          else if (v == "alie") c.attack = AttackKind::kAlie;
          else throw Error(ErrorCode::kConfig, "attack must be none, bf, rn, ipm or alie, got '" + v + "'");
        },
        [](const RunConfig& c) { return c.attack ? attack_name(*c.attack) : std::string("none"); });
    add("attack_param", [](RunConfig& c, const std::string& v) { c.attack_param = parse_double(v); },
        [](const RunConfig& c) { return format_double(c.attack_param); });
    add("alie_sign",
        [](RunConfig& c, const std::string& v) {
          if (v == "minus") c.alie_subtract = true;
          else if (v == "plus") c.alie_subtract = false;
          else throw Error(ErrorCode::kConfig, "alie_sign must be minus or plus, got '" + v + "'");
        },
        [](const RunConfig& c) { return std::string(c.alie_subtract ? "minus" : "plus"); });
    add("dim", [](RunConfig& c, const std::string& v) { c.dim = parse_int<Index>(v); },
        [](const RunConfig& c) { return std::to_string(c.dim); });
    add("mu", [](RunConfig& c, const std::string& v) { c.mu = parse_double(v); },
        [](const RunConfig& c) { return format_double(c.mu); });
    add("alpha", [](RunConfig& c, const std::string& v) { c.alpha = parse_double(v); },
        [](const RunConfig& c) { return format_double(c.alpha); });
    add("classes", [](RunConfig& c, const std::string& v) { c.classes = parse_int<Index>(v); },
        [](const RunConfig& c) { return std::to_string(c.classes); });
    add("features", [](RunConfig& c, const std::string& v) { c.features = parse_int<Index>(v); },
        [](const RunConfig& c) { return std::to_string(c.features); });
    add("validation_per_class",
        [](RunConfig& c, const std::string& v) { c.validation_per_class = parse_int<Index>(v); },
        [](const RunConfig& c) { return std::to_string(c.validation_per_class); });
    add("test_per_class",
        [](RunConfig& c, const std::string& v) { c.test_per_class = parse_int<Index>(v); },
        [](const RunConfig& c) { return std::to_string(c.test_per_class); });
    add("shard_size", [](RunConfig& c, const std::string& v) { c.shard_size = parse_int<Index>(v); },
        [](const RunConfig& c) { return std::to_string(c.shard_size); });
    add("batch_size", [](RunConfig& c, const std::string& v) { c.batch_size = parse_int<Index>(v); },
        [](const RunConfig& c) { return std::to_string(c.batch_size); });
    add("model_step", [](RunConfig& c, const std::string& v) { c.model_step = parse_double(v); },
        [](const RunConfig& c) { return format_double(c.model_step); });
    add("rounds", [](RunConfig& c, const std::string& v) { c.rounds = parse_int<std::int64_t>(v); },
        [](const RunConfig& c) { return std::to_string(c.rounds); });
    add("validation",
        [](RunConfig& c, const std::string& v) {
          if (v == "extra") c.validation_mode = ValidationMode::kExtraValidation;
          else if (v == "reuse-train") c.validation_mode = ValidationMode::kReuseTrain;
          else throw Error(ErrorCode::kConfig, "validation must be extra or reuse-train, got '" + v + "'");
        },
        [](const RunConfig& c) {
          return std::string(c.validation_mode == ValidationMode::kExtraValidation ? "extra"
                                                                                   : "reuse-train");
        });
    add("validation_size",
        [](RunConfig& c, const std::string& v) { c.validation_size = parse_int<Index>(v); },
        [](const RunConfig& c) { return std::to_string(c.validation_size); });
    add("exact_validation",
        [](RunConfig& c, const std::string& v) { c.exact_validation = parse_bool(v); },
        [](const RunConfig& c) { return bool_text(c.exact_validation); });
    add("noiseless", [](RunConfig& c, const std::string& v) { c.noiseless = parse_bool(v); },
        [](const RunConfig& c) { return bool_text(c.noiseless); });
    add("threads", [](RunConfig& c, const std::string& v) { c.threads = parse_int<int>(v); },
        [](const RunConfig& c) { return std::to_string(c.threads); });
    add("methods",
        [](RunConfig& c, const std::string& v) {
          c.methods = split_list(v);
          for (const std::string& m : c.methods) make_method(m, c.settings);
        },
        [](const RunConfig& c) {
          std::string s;
          for (std::size_t i = 0; i < c.methods.size(); ++i) {
            if (i) s += ",";
            s += c.methods[i];
          }
          return s;
        });
    add("md_lr", [](RunConfig& c, const std::string& v) { c.settings.md_lr = parse_double(v); },
        [](const RunConfig& c) { return format_double(c.settings.md_lr); });
    add("md_steps", [](RunConfig& c, const std::string& v) { c.settings.md_steps = parse_int<int>(v); },
        [](const RunConfig& c) { return std::to_string(c.settings.md_steps); });
    add("smd_minibatch",
        [](RunConfig& c, const std::string& v) { c.settings.smd_minibatch = parse_int<Index>(v); },
        [](const RunConfig& c) { return std::to_string(c.settings.smd_minibatch); });
    add("zo_smoothing",
        [](RunConfig& c, const std::string& v) { c.settings.zo_smoothing = parse_double(v); },
        [](const RunConfig& c) { return format_double(c.settings.zo_smoothing); });
    add("md_warm_start",
        [](RunConfig& c, const std::string& v) { c.settings.md_warm_start = parse_bool(v); },
        [](const RunConfig& c) { return bool_text(c.settings.md_warm_start); });
    add("fedadp_alpha",
        [](RunConfig& c, const std::string& v) { c.settings.fedadp_alpha = parse_double(v); },
        [](const RunConfig& c) { return format_double(c.settings.fedadp_alpha); });
    add("fedadp_smoothing",
        [](RunConfig& c, const std::string& v) {
          if (v == "none") c.settings.fedadp_smoothing = AngleSmoothing::kNone;
          else if (v == "running-mean") c.settings.fedadp_smoothing = AngleSmoothing::kRunningMean;
          else throw Error(ErrorCode::kConfig, "fedadp_smoothing must be none or running-mean, got '" + v + "'");
        },
        [](const RunConfig& c) {
          return std::string(c.settings.fedadp_smoothing == AngleSmoothing::kNone ? "none"
                                                                                 : "running-mean");
        });
    add("tawt_lr", [](RunConfig& c, const std::string& v) { c.settings.tawt_lr = parse_double(v); },
        [](const RunConfig& c) { return format_double(c.settings.tawt_lr); });
    add("tawt_scale",
        [](RunConfig& c, const std::string& v) { c.settings.tawt_scale = parse_double(v); },
        [](const RunConfig& c) { return format_double(c.settings.tawt_scale); });
    add("tawt_measure",
        [](RunConfig& c, const std::string& v) {
          if (v == "cosine") c.settings.tawt_measure = TawtMeasure::kCosine;
          else if (v == "angle") c.settings.tawt_measure = TawtMeasure::kAngle;
          else throw Error(ErrorCode::kConfig, "tawt_measure must be cosine or angle, got '" + v + "'");
        },
        [](const RunConfig& c) {
          return std::string(c.settings.tawt_measure == TawtMeasure::kCosine ? "cosine" : "angle");
        });
    add("seed", [](RunConfig& c, const std::string& v) { c.seed = parse_int<std::uint64_t>(v); },
        [](const RunConfig& c) { return std::to_string(c.seed); });
    add("repeats", [](RunConfig& c, const std::string& v) { c.repeats = parse_int<int>(v); },
        [](const RunConfig& c) { return std::to_string(c.repeats); });
    add("output_dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; },
        [](const RunConfig& c) { return c.output_dir; });
    return d;
  }();
  return defs;
}

const KeyDef* find_key(const std::string& name) {
  for (const KeyDef& k : key_defs()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

using Assignments = std::vector<std::pair<std::string, std::string>>;

Assignments preset_values(const std::string& name) {
  const Assignments mean_common = {
      {"task", "mean"},        {"clients", "150"},       {"groups", "5,95,50"},
      {"dim", "10"},           {"shard_size", "1000"},   {"batch_size", "100"},
      {"model_step", "0.01"},  {"rounds", "2000"},       {"validation", "extra"},
      {"validation_size", "1000"}, {"md_steps", "50"},   {"smd_minibatch", "100"},
      {"methods", "meritfed-md,meritfed-smd,sgd-full,sgd-ideal,fedadp,tawt"},
  };
  const Assignments byz_common = {
      {"task", "mean"},        {"clients", "55"},        {"groups", "5"},
      {"byzantine", "50"},     {"dim", "10"},            {"shard_size", "1000"},
      {"batch_size", "100"},   {"model_step", "0.01"},   {"rounds", "1000"},
      {"validation", "extra"}, {"validation_size", "1000"}, {"md_steps", "10"},
      {"md_lr", "3.5"},        {"smd_minibatch", "100"},
      {"methods", "meritfed-md,meritfed-smd,sgd-full,sgd-ideal"},
  };
  const Assignments softmax_common = {
      {"task", "softmax"},     {"clients", "20"},        {"groups", "1,10,9"},
      {"classes", "10"},       {"features", "10"},       {"shard_size", "1000"},
      {"batch_size", "75"},    {"model_step", "0.01"},   {"rounds", "500"},
      {"validation", "extra"}, {"validation_per_class", "300"},
      {"test_per_class", "1000"}, {"md_lr", "1"},        {"md_steps", "10"},
      {"smd_minibatch", "90"},
      {"methods", "meritfed-md,meritfed-smd,sgd-full,sgd-ideal,fedadp,tawt"},
  };
  auto with = [](Assignments base, Assignments extra) {
    base.insert(base.end(), extra.begin(), extra.end());
    return base;
  };
  if (name == "mean-mu-0.001") return with(mean_common, {{"mu", "0.001"}, {"md_lr", "3.5"}});
  if (name == "mean-mu-0.01") return with(mean_common, {{"mu", "0.01"}, {"md_lr", "4.5"}});
  if (name == "mean-mu-0.1") return with(mean_common, {{"mu", "0.1"}, {"md_lr", "12.5"}});
  if (name == "byzantine-bf") return with(byz_common, {{"attack", "bf"}, {"attack_param", "0"}});
  if (name == "byzantine-rn") return with(byz_common, {{"attack", "rn"}, {"attack_param", "1"}});
  if (name == "byzantine-ipm") return with(byz_common, {{"attack", "ipm"}, {"attack_param", "0.1"}});
  if (name == "byzantine-alie") return with(byz_common, {{"attack", "alie"}, {"attack_param", "100"}});
  if (name == "softmax-alpha-0.5") return with(softmax_common, {{"alpha", "0.5"}});
  if (name == "softmax-alpha-0.99") return with(softmax_common, {{"alpha", "0.99"}});
  std::string known;
  for (const std::string& p : preset_names()) known += " " + p;
  throw Error(ErrorCode::kConfig, "unknown preset '" + name + "'; known:" + known);
}

struct Entry {
  std::string key;
  std::string value;
  std::string where;  // "line 3" or "override 1"
};

}  // namespace

const std::vector<std::string>& required_keys() {
  static const std::vector<std::string> keys = {
      "task", "clients", "groups", "shard_size", "batch_size", "model_step", "rounds", "methods"};
  return keys;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {
      "mean-mu-0.001",  "mean-mu-0.01",  "mean-mu-0.1",        "byzantine-bf",
      "byzantine-rn",   "byzantine-ipm", "byzantine-alie",     "softmax-alpha-0.5",
      "softmax-alpha-0.99"};
  return names;
}

MethodConfig make_method(const std::string& name, const MethodSettings& s) {
  MethodConfig m;
  m.label = name;
  m.md.step_size = s.md_lr;
  m.md.steps = s.md_steps;
  m.md.smoothing = s.zo_smoothing;
  m.warm_start = s.md_warm_start;
  m.gompertz_alpha = s.fedadp_alpha;
  m.smoothing = s.fedadp_smoothing;
  m.tawt_step = s.tawt_lr > 0.0 ? s.tawt_lr : s.md_lr;
  m.tawt_scale = s.tawt_scale;
  m.tawt_measure = s.tawt_measure;
  if (name == "meritfed-md") {
    m.kind = MethodKind::kMeritFed;
  } else if (name == "meritfed-smd") {
    m.kind = MethodKind::kMeritFed;
    m.md.minibatch = s.smd_minibatch;
  } else if (name == "meritfed-zo") {
    m.kind = MethodKind::kMeritFed;
    m.md.estimator = WeightEstimator::kZerothOrder;
  } else if (name == "sgd-full") {
    m.kind = MethodKind::kSgdFull;
  } else if (name == "sgd-ideal") {
    m.kind = MethodKind::kSgdIdeal;
  } else if (name == "fedadp") {
    m.kind = MethodKind::kFedAdp;
  } else if (name == "tawt") {
    m.kind = MethodKind::kTawt;
  } else if (name.starts_with("fedavg-")) {
    m.kind = MethodKind::kFedAvgSampled;
    m.sampled_clients = parse_int<Index>(name.substr(7));
  } else {
    throw Error(ErrorCode::kConfig,
                "unknown method '" + name +
                    "'; known: meritfed-md, meritfed-smd, meritfed-zo, sgd-full, sgd-ideal, "
                    "fedadp, tawt, fedavg-<K>");
  }
  return m;
}

ExperimentSpec to_experiment(const RunConfig& c, std::uint64_t seed) {
  ExperimentSpec s;
  s.task = c.task;
  s.group_sizes = c.groups;
  s.byzantine = c.byzantine;
  if (c.attack) s.attack = AttackSpec{*c.attack, c.attack_param, c.alie_subtract};
  s.dim = c.dim;
  s.mu = c.mu;
  s.alpha = c.alpha;
  s.classes = c.classes;
  s.features = c.features;
  s.validation_per_class = c.validation_per_class;
  s.test_per_class = c.test_per_class;
  s.shard_size = c.shard_size;
  s.batch_size = c.batch_size;
  s.model_step = c.model_step;
  s.rounds = c.rounds;
  s.validation_mode = c.validation_mode;
  s.validation_size = c.validation_size;
  s.exact_validation = c.exact_validation;
  s.noiseless = c.noiseless;
  s.threads = c.threads;
  s.seed = seed;
  for (const std::string& name : c.methods) s.methods.push_back(make_method(name, c.settings));
  return s;
}

RunConfig parse_config(std::string_view text, const std::vector<std::string>& overrides,
                       const std::optional<std::string>& preset) {
  std::vector<Entry> entries;
  std::optional<Entry> preset_entry;

  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kConfig, where + ": expected key = value, got '" + line + "'");
    }
    Entry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), where};
    if (e.key == "preset") preset_entry = e;
    else entries.push_back(std::move(e));
  }
  for (std::size_t i = 0; i < overrides.size(); ++i) {
    const std::string where = "override " + std::to_string(i + 1);
    const auto eq = overrides[i].find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kConfig, where + ": expected key=value, got '" + overrides[i] + "'");
    }
    Entry e{trim(overrides[i].substr(0, eq)), trim(overrides[i].substr(eq + 1)), where};
    if (e.key == "preset") preset_entry = e;
    else entries.push_back(std::move(e));
  }
  if (preset) preset_entry = Entry{"preset", *preset, "--preset"};

  RunConfig config;
  std::set<std::string> provided;
  std::map<std::string, std::string> location;

  if (preset_entry && !preset_entry->value.empty()) {
    Assignments values;
    try {
      values = preset_values(preset_entry->value);
    } catch (const Error& err) {
      throw Error(err.code(), preset_entry->where + ": " + err.detail());
    }
    config.preset = preset_entry->value;
    for (const auto& [key, value] : values) {
      find_key(key)->set(config, value);
      provided.insert(key);
      location[key] = "preset " + config.preset;
    }
  }

  // Method names depend on the settings, so `methods` is applied after every
  // other key.
  std::optional<Entry> methods_entry;
  for (const Entry& e : entries) {
    const KeyDef* def = find_key(e.key);
    if (!def) throw Error(ErrorCode::kConfig, e.where + ": unknown key '" + e.key + "'");
    if (e.key == "methods") {
      methods_entry = e;
      continue;
    }
    try {
      def->set(config, e.value);
    } catch (const Error& err) {
      throw Error(err.code(), e.where + ": " + e.key + ": " + err.detail());
    }
    provided.insert(e.key);
    location[e.key] = e.where;
  }
  try {
    if (methods_entry) {
      find_key("methods")->set(config, methods_entry->value);
      provided.insert("methods");
      location["methods"] = methods_entry->where;
    } else {
      for (const std::string& m : config.methods) make_method(m, config.settings);
    }
  } catch (const Error& err) {
    const std::string where = methods_entry ? methods_entry->where : location["methods"];
    throw Error(err.code(), where + ": methods: " + err.detail());
  }

  std::vector<std::string> missing;
  for (const std::string& k : required_keys()) {
    if (!provided.contains(k)) missing.push_back(k);
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size(); ++i) list += (i ? ", " : "") + missing[i];
    throw Error(ErrorCode::kConfig, "missing required keys: " + list);
  }

  Index total = config.byzantine;
  for (Index g : config.groups) total += g;
  if (total != config.clients) {
    throw Error(ErrorCode::kConfig,
                location["clients"] + ": clients = " + std::to_string(config.clients) +
                    " but groups and byzantine sum to " + std::to_string(total));
  }
  if (config.byzantine > 0 && !config.attack) {
    throw Error(ErrorCode::kConfig,
                location["byzantine"] + ": byzantine clients need an attack");
  }
  if (config.repeats < 1) {
    throw Error(ErrorCode::kConfig, location["repeats"] + ": repeats must be >= 1");
  }
  try {
    to_experiment(config, config.seed).validate();
  } catch (const Error& err) {
    throw Error(err.code(), "invalid configuration: " + err.detail());
  }
  return config;
}

std::string emit_config(const RunConfig& config) {
  std::string out;
  if (!config.preset.empty()) out += "preset = " + config.preset + "\n";
  for (const KeyDef& k : key_defs()) {
    const std::string value = k.get(config);
    if (k.name == "output_dir" && value.empty()) continue;
    out += k.name + " = " + value + "\n";
  }
  return out;
}

}  // namespace meritfed
