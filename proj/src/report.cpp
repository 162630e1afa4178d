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

#include "meritfed/report.hpp"

#include <cstdio>
#include <optional>
#include <sstream>
#include <utility>

#include "json.hpp"

#include "meritfed/error.hpp"

#ifndef MERITFED_VERSION
#define MERITFED_VERSION "0.0.0"
#endif

namespace meritfed {
namespace {

std::string optional_number(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string();
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

const char* version_string() { return MERITFED_VERSION; }

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvSink::CsvSink(std::ostream& metrics, std::ostream& weights, std::uint64_t seed,
                 std::vector<std::string> labels)
    : metrics_(&metrics), weights_(&weights), seed_(seed), labels_(std::move(labels)) {}

void CsvSink::write_headers(std::ostream& metrics, std::ostream& weights) {
  metrics << "seed,round,method,dist_sq,loss_gap,grad_norm_sq,val_loss,accuracy,delta\n";
  weights << "seed,round,method,client_index,weight\n";
}

void CsvSink::on_round(const RoundMetrics& r) {
  const std::string prefix = std::to_string(seed_) + "," + std::to_string(r.round) + ",";
  std::string wbuf;
  for (std::size_t m = 0; m < r.methods.size(); ++m) {
    const MethodRoundMetrics& x = r.methods[m];
    *metrics_ << prefix << labels_[m] << ',' << optional_number(x.dist_sq) << ','
              << optional_number(x.loss_gap) << ',' << optional_number(x.grad_norm_sq) << ','
              << format_number(x.val_loss) << ',' << optional_number(x.accuracy) << ','
              << format_number(x.delta) << '\n';
    const Vector& w = x.weights.values();
    for (Index i = 0; i < w.size(); ++i) {
      wbuf += prefix;
      wbuf += labels_[m];
      wbuf += ',';
      wbuf += std::to_string(i);
      wbuf += ',';
      wbuf += format_number(w[i]);
      wbuf += '\n';
    }
  }
  *weights_ << wbuf;
  if (!*metrics_ || !*weights_) throw Error(ErrorCode::kIo, "failed to write metric rows");
}

void write_theorem_header(std::ostream& out) {
  out << "seed,method,applicable,delta_source,rounds,model_step,smoothness,pl_constant,"
         "sigma_sq,group_size,delta_bar,initial_gap,step_condition,avg_grad_norm_sq,"
         "nonconvex_rhs,nonconvex_holds,final_gap,pl_contraction,pl_rhs,pl_holds\n";
}

void write_theorem_rows(std::ostream& out, std::uint64_t seed,
                        const std::vector<TheoremReport>& reports) {
  for (const TheoremReport& r : reports) {
    out << seed << ',' << r.method << ',' << (r.applicable ? 1 : 0) << ',' << r.delta_source;
    if (!r.applicable) {
      out << ",,,,,,,,,,,,,,,\n";
      continue;
    }
    out << ',' << r.rounds << ',' << format_number(r.model_step) << ','
        << format_number(r.smoothness) << ',' << format_number(r.pl_constant) << ','
        << format_number(r.sigma_sq) << ',' << r.group_size << ',' << format_number(r.delta_bar)
        << ',' << format_number(r.initial_gap) << ',' << (r.step_condition ? 1 : 0) << ','
        << format_number(r.avg_grad_norm_sq) << ',' << format_number(r.nonconvex_rhs) << ','
        << (r.nonconvex_holds ? 1 : 0) << ',' << format_number(r.final_gap) << ','
        << format_number(r.pl_contraction) << ',' << format_number(r.pl_rhs) << ','
        << (r.pl_holds ? 1 : 0) << '\n';
  }
}

std::string manifest_json(const RunConfig& config, const std::vector<SeedSummary>& seeds) {
  nlohmann::ordered_json j;
  j["version"] = version_string();
  j["preset"] = config.preset;
  nlohmann::ordered_json expanded = nlohmann::ordered_json::object();
  std::istringstream in(emit_config(config));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) expanded[line.substr(0, eq)] = line.substr(eq + 3);
  }
  j["config"] = std::move(expanded);
  j["config_text"] = emit_config(config);
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const SeedSummary& s : seeds) {
    nlohmann::ordered_json run;
    run["seed"] = s.seed;
    run["mixture_direction"] = std::vector<double>(
        s.mixture_direction.data(), s.mixture_direction.data() + s.mixture_direction.size());
    runs.push_back(std::move(run));
  }
  j["runs"] = std::move(runs);
  return j.dump(2) + "\n";
}

std::vector<ExperimentResult> run_and_write(const RunConfig& config,
                                            const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());

  std::ofstream metrics = open_output(dir / "metrics.csv");
  std::ofstream weights = open_output(dir / "weights.csv");
  std::ofstream theorem = open_output(dir / "theorem.csv");
  CsvSink::write_headers(metrics, weights);
  write_theorem_header(theorem);

  std::vector<ExperimentResult> results;
  std::vector<SeedSummary> seeds;
  for (int r = 0; r < config.repeats; ++r) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(r);
    CsvSink sink(metrics, weights, seed, config.methods);
    results.push_back(run_experiment(to_experiment(config, seed), &sink));
    write_theorem_rows(theorem, seed, results.back().theorems);
    seeds.push_back({seed, results.back().mixture_direction});
  }

  std::ofstream manifest = open_output(dir / "manifest.json");
  manifest << manifest_json(config, seeds);
  metrics.close();
  weights.close();
  theorem.close();
  manifest.close();
  if (!metrics || !weights || !theorem || !manifest) {
    throw Error(ErrorCode::kIo, "failed to write outputs in " + dir.string());
  }
  return results;
}

}  // namespace meritfed
