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

// CSV and manifest output for experiment runs. Numbers are written with 17
// significant digits; missing values are empty fields.

#ifndef MERITFED_REPORT_HPP_
#define MERITFED_REPORT_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "meritfed/config.hpp"
#include "meritfed/engine.hpp"

namespace meritfed {

std::string format_number(double v);

// Streams metrics.csv and weights.csv rows as rounds complete.
class CsvSink final : public MetricSink {
 public:
  CsvSink(std::ostream& metrics, std::ostream& weights, std::uint64_t seed,
          std::vector<std::string> labels);

  void on_round(const RoundMetrics& metrics) override;

  static void write_headers(std::ostream& metrics, std::ostream& weights);

 private:
  std::ostream* metrics_;
  std::ostream* weights_;
  std::uint64_t seed_;
  std::vector<std::string> labels_;
};

void write_theorem_header(std::ostream& out);
void write_theorem_rows(std::ostream& out, std::uint64_t seed,
                        const std::vector<TheoremReport>& reports);

struct SeedSummary {
  std::uint64_t seed = 0;
  Vector mixture_direction;
};

std::string manifest_json(const RunConfig& config, const std::vector<SeedSummary>& seeds);

// Runs every repeat seed of `config` and writes metrics.csv, weights.csv,
// theorem.csv and manifest.json into `dir`. Returns the per-seed results.
std::vector<ExperimentResult> run_and_write(const RunConfig& config,
                                            const std::filesystem::path& dir);

const char* version_string();

}  // namespace meritfed

#endif  // MERITFED_REPORT_HPP_
