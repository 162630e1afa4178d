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

// Python bindings: weight solving, attacks, configs and whole runs.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "meritfed/aggregators.hpp"
#include "meritfed/clients.hpp"
#include "meritfed/config.hpp"
#include "meritfed/engine.hpp"
#include "meritfed/error.hpp"
#include "meritfed/report.hpp"
#include "meritfed/simplex.hpp"
#include "meritfed/tasks.hpp"

namespace py = pybind11;
namespace mf = meritfed;
using mf::Index;
using mf::Matrix;
using mf::Vector;

namespace {

mf::GradientSet gradient_set(const Matrix& messages) {
  mf::GradientSet g;
  g.messages = messages;
  return g;
}

py::dict solve(const Vector& x, const Matrix& gradients, double model_step,
               const Matrix& validation, double md_lr, int md_steps, Index minibatch,
               std::uint64_t seed) {
  mf::DistributionSpec target;
  target.center = Vector::Zero(x.size());
  const mf::MeanEstimationTask task(target);
  mf::DatasetShard data;
  data.features = validation;
  const mf::ValidationOracle oracle(task, std::move(data), mf::ValidationMode::kExtraValidation);
  mf::MdConfig md{md_lr, md_steps};
  md.minibatch = minibatch;
  mf::Rng rng(seed);
  const auto sol =
      mf::weights_meritfed(x, gradient_set(gradients), model_step, md, oracle, rng);
  py::dict out;
  out["weights"] = sol.weights.values();
  out["value"] = sol.value;
  out["delta"] = sol.delta;
  return out;
}

py::dict theorem_dict(const mf::TheoremReport& r) {
  py::dict d;
  d["method"] = r.method;
  d["applicable"] = r.applicable;
  if (!r.applicable) return d;
  d["delta_bar"] = r.delta_bar;
  d["avg_grad_norm_sq"] = r.avg_grad_norm_sq;
  d["nonconvex_rhs"] = r.nonconvex_rhs;
  d["nonconvex_holds"] = r.nonconvex_holds;
  d["final_gap"] = r.final_gap;
  d["pl_rhs"] = r.pl_rhs;
  d["pl_holds"] = r.pl_holds;
  return d;
}

// Per-method histories as arrays: rounds x clients weights and per-round metrics.
py::dict run(const std::string& text, const std::vector<std::string>& overrides,
             const std::optional<std::string>& preset, std::uint64_t seed) {
  const mf::RunConfig config = mf::parse_config(text, overrides, preset);
  const mf::ExperimentSpec spec = mf::to_experiment(config, seed);
  mf::ExperimentResult result;
  {
    py::gil_scoped_release release;
    result = mf::run_experiment(spec);
  }
  const auto rounds = static_cast<Index>(result.rounds.size());
  py::dict methods;
  for (std::size_t m = 0; m < spec.methods.size(); ++m) {
    Matrix weights(rounds, spec.clients());
    Vector val_loss(rounds);
    Vector dist_sq = Vector::Constant(rounds, std::numeric_limits<double>::quiet_NaN());
    Vector accuracy = dist_sq;
    for (Index t = 0; t < rounds; ++t) {
      const auto& r = result.rounds[static_cast<std::size_t>(t)].methods[m];
      weights.row(t) = r.weights.values().transpose();
      val_loss[t] = r.val_loss;
      if (r.dist_sq) dist_sq[t] = *r.dist_sq;
      if (r.accuracy) accuracy[t] = *r.accuracy;
    }
    py::dict d;
    d["weights"] = weights;
    d["val_loss"] = val_loss;
    d["dist_sq"] = dist_sq;
    d["accuracy"] = accuracy;
    d["final_point"] = result.final_points[m];
    d["theorem"] = theorem_dict(result.theorems[m]);
    methods[py::str(spec.methods[m].label)] = d;
  }
  py::dict out;
  out["methods"] = methods;
  out["mixture_direction"] = result.mixture_direction;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Merit-based federated aggregation core";
  py::register_exception<mf::Error>(m, "MeritFedError", PyExc_ValueError);

  m.attr("__version__") = mf::version_string();

  m.def("uniform_weights", [](Index n) { return mf::uniform_weights(n).values(); }, py::arg("n"));
  m.def(
      "entropic_md_step",
      [](const Vector& w, const Vector& g, double step) {
        return mf::entropic_md_step(mf::SimplexWeights::from_values(w), g, step).values();
      },
      py::arg("w"), py::arg("g"), py::arg("step"));
  m.def("meritfed_weights", &solve, py::arg("x"), py::arg("gradients"), py::arg("model_step"),
        py::arg("validation"), py::arg("md_lr") = 3.5, py::arg("md_steps") = 50,
        py::arg("minibatch") = 0, py::arg("seed") = 0,
        "MeritFed weights for the mean-estimation loss on `validation` (columns are samples).");
  m.def(
      "apply_update",
      [](const Vector& x, const Matrix& gradients, const Vector& w, double model_step) {
        return mf::apply_update(x, gradient_set(gradients), mf::SimplexWeights::from_values(w),
                                model_step);
      },
      py::arg("x"), py::arg("gradients"), py::arg("w"), py::arg("model_step"));

  m.def("attack_bf", &mf::attack_bf, py::arg("g"));
  m.def("attack_ipm", &mf::attack_ipm, py::arg("honest"), py::arg("epsilon"));
  m.def("attack_alie", &mf::attack_alie, py::arg("honest"), py::arg("z"),
        py::arg("subtract") = true);

  m.def("preset_names", &mf::preset_names);
  m.def(
      "expand_config",
      [](const std::string& text, const std::vector<std::string>& overrides,
         const std::optional<std::string>& preset) {
        return mf::emit_config(mf::parse_config(text, overrides, preset));
      },
      py::arg("text") = "", py::arg("overrides") = std::vector<std::string>{},
      py::arg("preset") = py::none(), "Validated, fully expanded configuration text.");
  m.def("run", &run, py::arg("text") = "", py::arg("overrides") = std::vector<std::string>{},
        py::arg("preset") = py::none(), py::arg("seed") = 0);
  m.def(
      "run_and_write",
      [](const std::string& text, const std::vector<std::string>& overrides,
         const std::optional<std::string>& preset, const std::filesystem::path& out) {
        const mf::RunConfig config = mf::parse_config(text, overrides, preset);
        py::gil_scoped_release release;
        mf::run_and_write(config, out);
      },
      py::arg("text"), py::arg("overrides"), py::arg("preset"), py::arg("out"));
}
