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

#include "meritfed/engine.hpp"

#include <cmath>
#include <exception>
#include <set>
#include <string>
#include <thread>
#include <utility>

#include "meritfed/error.hpp"

namespace meritfed {
namespace {

Error with_context(const Error& e, const std::string& context) {
  return Error(e.code(), context + ": " + e.detail());
}

// Runs body(i) for i in [0, count) on up to `threads` workers. Every index is
// handled exactly once and results are written by index, so the outcome does
// not depend on scheduling. The exception of the lowest failing index wins.
template <typename Body>
void parallel_for(Index count, int threads, Body&& body) {
  const Index workers = std::min<Index>(std::max(threads, 1), count);
  if (workers <= 1) {
    for (Index i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(count));
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (Index w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (Index i = w; i < count; i += workers) {
          try {
            body(i);
          } catch (...) {
            failures[static_cast<std::size_t>(i)] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

// The closed-form target loss as a MeritFed objective. It has no samples, so
// every subset evaluates the full objective.
class ClosedFormOracle final : public LossOracle {
 public:
  explicit ClosedFormOracle(const KnownObjective& objective) : objective_(&objective) {}

  Index sample_count() const override { return 1; }
  double loss(const Vector& y, Subset) const override { return objective_->value(y); }
  LossGrad loss_grad(const Vector& y, Subset) const override {
    return {objective_->value(y), objective_->gradient(y)};
  }

 private:
  const KnownObjective* objective_;
};

bool finite(const MethodRoundMetrics& m) {
  auto ok = [](const std::optional<double>& v) { return !v || std::isfinite(*v); };
  return ok(m.dist_sq) && ok(m.loss_gap) && ok(m.grad_norm_sq) && ok(m.accuracy) &&
         ok(m.true_delta) && std::isfinite(m.val_loss) && std::isfinite(m.delta) &&
         std::isfinite(m.phi_selected) && std::isfinite(m.phi_ideal);
}

}  // namespace

Index ExperimentSpec::clients() const {
  Index n = byzantine;
  for (Index g : group_sizes) n += g;
  return n;
}

std::vector<ClientRole> ExperimentSpec::roles() const {
  std::vector<ClientRole> out;
  int index = 0;
  for (std::size_t g = 0; g < group_sizes.size(); ++g) {
    for (Index c = 0; c < group_sizes[g]; ++c) {
      out.push_back({index++, static_cast<int>(g) + 1, std::nullopt});
    }
  }
  for (Index b = 0; b < byzantine; ++b) out.push_back({index++, 1, attack});
  return out;
}

void ExperimentSpec::validate() const {
  if (group_sizes.empty() || group_sizes[0] < 1) {
    throw Error(ErrorCode::kConfig, "the first group must contain the target client");
  }
  for (Index g : group_sizes) {
    if (g < 0) throw Error(ErrorCode::kConfig, "group sizes must be nonnegative");
  }
  if (task == TaskKind::kMeanEstimation && group_sizes.size() > 3) {
    throw Error(ErrorCode::kConfig, "mean estimation has at most three groups");
  }
  if (task == TaskKind::kSoftmax && group_sizes.size() != 3) {
    throw Error(ErrorCode::kConfig, "softmax task needs exactly three groups");
  }
  if (byzantine < 0) throw Error(ErrorCode::kConfig, "byzantine count must be nonnegative");
  if (byzantine > 0) {
    if (!attack) throw Error(ErrorCode::kConfig, "byzantine clients need an attack");
    attack->validate();
  }
  if (rounds < 1) throw Error(ErrorCode::kConfig, "round count must be >= 1");
  if (!(model_step > 0.0)) throw Error(ErrorCode::kConfig, "model step must be positive");
  if (shard_size < 1) throw Error(ErrorCode::kConfig, "shard size must be >= 1");
  if (batch_size < 1 || batch_size > shard_size) {
    throw Error(ErrorCode::kConfig, "batch size must lie in [1, shard size]");
  }
  if (dim < 1) throw Error(ErrorCode::kInvalidDimension, "dimension must be >= 1");
  if (threads < 1) throw Error(ErrorCode::kConfig, "thread count must be >= 1");
  if (task != TaskKind::kMeanEstimation && (exact_validation || noiseless)) {
    throw Error(ErrorCode::kConfig,
                "exact validation and noiseless clients need the mean-estimation task");
  }
  if (task == TaskKind::kMeanEstimation && validation_mode == ValidationMode::kExtraValidation &&
      validation_size < 1) {
    throw Error(ErrorCode::kConfig, "validation size must be >= 1");
  }
  if (methods.empty()) throw Error(ErrorCode::kConfig, "no methods configured");
  std::set<std::string> labels;
  for (const MethodConfig& m : methods) {
    if (m.label.empty()) throw Error(ErrorCode::kConfig, "method label is empty");
    if (!labels.insert(m.label).second) {
      throw Error(ErrorCode::kConfig, "duplicate method label " + m.label);
    }
    m.validate(clients());
  }
}

std::vector<Index> client_batch(std::uint64_t seed, Index client, std::int64_t round,
                                Index shard_size, Index batch_size) {
  Rng rng = make_stream(seed, Stream::kBatch,
                        {static_cast<std::uint64_t>(client), static_cast<std::uint64_t>(round)});
  return draw_batch(shard_size, batch_size, rng);
}

Simulation::Simulation(ExperimentSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  roles_ = spec_.roles();
  validate_roles(roles_);
  const Index n = spec_.clients();
  const Index honest = n - spec_.byzantine;

  Vector x0;
  if (spec_.task == TaskKind::kMeanEstimation) {
    Rng mix = make_stream(spec_.seed, Stream::kMixture);
    mixture_ = unit_sphere(spec_.dim, mix);
    const Vector centers[3] = {Vector::Zero(spec_.dim),
                               Vector::Constant(spec_.dim, spec_.mu), mixture_};
    for (std::size_t g = 0; g < spec_.group_sizes.size(); ++g) {
      DistributionSpec s;
      s.kind = DistributionKind::kGaussianMean;
      s.center = centers[g];
      s.group_id = static_cast<int>(g) + 1;
      specs_.push_back(std::move(s));
    }
    task_ = std::make_unique<MeanEstimationTask>(specs_[0]);
    for (const ClientRole& r : roles_) {
      Rng rng = make_stream(spec_.seed, Stream::kShard, {static_cast<std::uint64_t>(r.index)});
      DatasetShard shard = generate_gaussian_shard(
          specs_[static_cast<std::size_t>(r.group - 1)], spec_.shard_size, r.index, rng);
      shard.group = r.group;
      shards_.push_back(std::move(shard));
    }
    DatasetShard val;
    if (spec_.validation_mode == ValidationMode::kExtraValidation) {
      Rng rng = make_stream(spec_.seed, Stream::kValidation);
      val = generate_gaussian_shard(specs_[0], spec_.validation_size, -1, rng);
    } else {
      val = shards_[0];
    }
    validation_ = std::make_unique<ValidationOracle>(*task_, std::move(val),
                                                     spec_.validation_mode);
    if (spec_.exact_validation) {
      exact_oracle_ = std::make_unique<ClosedFormOracle>(*task_->known_objective());
    }
    x0 = Vector::Ones(spec_.dim);
  } else {
    SoftmaxSplit split;
    split.group_sizes = spec_.group_sizes;
    split.alpha = spec_.alpha;
    split.classes = spec_.classes;
    split.features = spec_.features;
    split.shard_size = spec_.shard_size;
    split.validation_per_class = spec_.validation_per_class;
    split.test_per_class = spec_.test_per_class;
    SoftmaxData data = softmax_task_generate(split, spec_.seed);
    task_ = std::make_unique<SoftmaxTask>(spec_.classes, spec_.features);
    specs_ = data.specs;
    shards_ = std::move(data.shards);
    for (Index b = 0; b < spec_.byzantine; ++b) {
      const int owner = static_cast<int>(honest + b);
      Rng rng = make_stream(spec_.seed, Stream::kShard, {static_cast<std::uint64_t>(owner)});
      DatasetShard shard = generate_cluster_shard(specs_[0], data.class_centers,
                                                  spec_.shard_size, owner, rng);
      shard.group = 1;
      shards_.push_back(std::move(shard));
    }
    DatasetShard val = spec_.validation_mode == ValidationMode::kExtraValidation
                           ? std::move(data.validation)
                           : shards_[0];
    validation_ = std::make_unique<ValidationOracle>(*task_, std::move(val),
                                                     spec_.validation_mode);
    test_ = std::move(data.test);
    x0 = Vector::Zero(task_->model_dim());
  }

  ideal_ = target_group(roles_);
  for (std::size_t m = 0; m < spec_.methods.size(); ++m) {
    MethodConfig cfg = spec_.methods[m];
    cfg.model_step = spec_.model_step;
    if (cfg.kind == MethodKind::kMeritFed) {
      const Index size = exact_oracle_ ? exact_oracle_->sample_count()
                                       : validation_->sample_count();
      cfg.md.validate(size);
    }
    aggregators_.emplace_back(std::move(cfg), n, 0, ideal_);
    points_.push_back(x0);
  }
  const MethodRoundMetrics start = measure(x0);
  initial_.assign(spec_.methods.size(), start);
  batches_.assign(static_cast<std::size_t>(n), {});
}

Simulation::~Simulation() = default;

MethodRoundMetrics Simulation::measure(const Vector& x) const {
  MethodRoundMetrics out;
  if (const KnownObjective* obj = task_->known_objective()) {
    const double gap = obj->value(x) - obj->optimal_value;
    out.dist_sq = (x - obj->optimum).squaredNorm();
    out.loss_gap = gap;
    out.grad_norm_sq = obj->gradient(x).squaredNorm();
  }
  out.val_loss = validation_->loss(x);
  if (test_) out.accuracy = task_->accuracy(x, *test_);
  out.weights = SimplexWeights::uniform(spec_.clients());
  return out;
}

GradientSet Simulation::collect(const Vector& x, std::size_t method) const {
  const Index n = spec_.clients();
  const Index honest = n - spec_.byzantine;
  GradientSet grads;
  grads.round = round_;
  grads.messages.resize(task_->model_dim(), n);

  const bool needs_own =
      spec_.attack && (spec_.attack->kind == AttackKind::kBitFlip ||
                       spec_.attack->kind == AttackKind::kRandomNoise);
  const Index computed = needs_own ? n : honest;

  // Phase 1: every honest message, plus the clean gradient a bit-flip or
  // noise attacker starts from.
  parallel_for(computed, spec_.threads, [&](Index i) {
    try {
      const ClientRole& role = roles_[static_cast<std::size_t>(i)];
      if (spec_.noiseless) {
        grads.messages.col(i) =
            task_->expected_gradient(x, specs_[static_cast<std::size_t>(role.group - 1)]);
      } else {
        grads.messages.col(i) = honest_message(*task_, x, shards_[static_cast<std::size_t>(i)],
                                               batches_[static_cast<std::size_t>(i)]);
      }
    } catch (const Error& e) {
      throw with_context(e, "method " + spec_.methods[method].label + ", client " +
                                std::to_string(i));
    }
  });

  // Phase 2: Byzantine messages, which may depend on the full honest set.
  if (spec_.byzantine > 0) {
    const AttackSpec& attack = *spec_.attack;
    try {
      if (attack.kind == AttackKind::kIpm || attack.kind == AttackKind::kAlie) {
        // Colluders see the honest gradients of the target group.
        Matrix honest_cols(grads.dim(), static_cast<Index>(ideal_.size()));
        for (std::size_t k = 0; k < ideal_.size(); ++k) {
          honest_cols.col(static_cast<Index>(k)) = grads.messages.col(ideal_[k]);
        }
        const Vector forged = attack.kind == AttackKind::kIpm
                                  ? attack_ipm(honest_cols, attack.parameter)
                                  : attack_alie(honest_cols, attack.parameter,
                                                attack.alie_subtract);
        for (Index i = honest; i < n; ++i) grads.messages.col(i) = forged;
      } else {
        for (Index i = honest; i < n; ++i) {
          if (attack.kind == AttackKind::kBitFlip) {
            grads.messages.col(i) = attack_bf(grads.messages.col(i));
          } else {
            Rng rng = make_stream(spec_.seed, Stream::kAttack,
                                  {static_cast<std::uint64_t>(i),
                                   static_cast<std::uint64_t>(round_)});
            grads.messages.col(i) = attack_rn(grads.messages.col(i), attack.parameter, rng);
          }
        }
      }
    } catch (const Error& e) {
      throw with_context(e, "method " + spec_.methods[method].label + ", attack " +
                                attack_name(attack.kind));
    }
  }
  return grads;
}

RoundMetrics Simulation::run_round() {
  ++round_;
  const Index n = spec_.clients();
  if (!spec_.noiseless) {
    for (Index i = 0; i < n; ++i) {
      batches_[static_cast<std::size_t>(i)] =
          client_batch(spec_.seed, i, round_, spec_.shard_size, spec_.batch_size);
    }
  }

  const LossOracle& oracle =
      exact_oracle_ ? static_cast<const LossOracle&>(*exact_oracle_) : *validation_;
  const KnownObjective* known = task_->known_objective();
  const double gamma = spec_.model_step;

  RoundMetrics out;
  out.round = round_;
  for (std::size_t m = 0; m < aggregators_.size(); ++m) {
    const std::string context =
        "round " + std::to_string(round_) + ", method " + spec_.methods[m].label;
    try {
      const Vector& x = points_[m];
      const GradientSet grads = collect(x, m);

      const Stream tag = spec_.methods[m].kind == MethodKind::kFedAvgSampled
                             ? Stream::kSampling
                             : Stream::kMirrorDescent;
      Rng rng = make_stream(spec_.seed, tag,
                            {static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(round_)});
      AggregationResult agg = aggregators_[m].aggregate(x, grads, oracle, rng);

      Vector next = apply_update(x, grads, agg.weights, gamma);
      MethodRoundMetrics metrics = measure(next);
      metrics.delta = agg.delta;
      metrics.phi_selected = oracle.loss(next);
      Vector ideal_step = Vector::Zero(x.size());
      for (Index i : ideal_) ideal_step += grads.messages.col(i);
      metrics.phi_ideal =
          oracle.loss(x - gamma * ideal_step / static_cast<double>(ideal_.size()));
      if (known) {
        const Vector weight_grad = -gamma * (grads.messages.transpose() * known->gradient(next));
        metrics.true_delta = frank_wolfe_gap(agg.weights.values(), weight_grad);
      }
      metrics.weights = std::move(agg.weights);
      if (!finite(metrics)) {
        throw Error(ErrorCode::kNumericInput, "non-finite metric after the update");
      }
      points_[m] = std::move(next);
      out.methods.push_back(std::move(metrics));
    } catch (const Error& e) {
      throw with_context(e, context);
    }
  }
  return out;
}

TheoremReport theorem_not_applicable(const std::string& method) {
  TheoremReport r;
  r.method = method;
  r.applicable = false;
  r.delta_source = "none";
  return r;
}

TheoremReport theorem_check(const TheoremInput& in) {
  if (in.grad_norms_sq.empty()) throw Error(ErrorCode::kConfig, "theorem check needs T >= 1");
  if (!(in.model_step > 0.0) || !(in.smoothness > 0.0) || !(in.pl_constant > 0.0)) {
    throw Error(ErrorCode::kConfig, "theorem constants must be positive");
  }
  if (in.group_size < 1) throw Error(ErrorCode::kConfig, "group size must be >= 1");
  if (in.sigma_sq < 0.0 || in.delta_bar < 0.0) {
    throw Error(ErrorCode::kConfig, "variance and delta must be nonnegative");
  }

  TheoremReport r;
  r.method = in.method;
  r.applicable = true;
  r.delta_source = in.delta_source;
  r.rounds = static_cast<std::int64_t>(in.grad_norms_sq.size());
  r.model_step = in.model_step;
  r.smoothness = in.smoothness;
  r.pl_constant = in.pl_constant;
  r.sigma_sq = in.sigma_sq;
  r.group_size = in.group_size;
  r.delta_bar = in.delta_bar;
  r.initial_gap = in.initial_gap;
  r.step_condition = in.model_step <= 1.0 / (2.0 * in.smoothness);

  const double t = static_cast<double>(r.rounds);
  const double g = static_cast<double>(in.group_size);
  const double gamma = in.model_step;
  const double l = in.smoothness;
  const double mu = in.pl_constant;

  double sum = 0.0;
  for (double v : in.grad_norms_sq) sum += v;
  r.avg_grad_norm_sq = sum / t;
  r.nonconvex_rhs = 2.0 * in.initial_gap / (t * gamma) + 2.0 * in.sigma_sq * gamma * l / g +
                    2.0 * in.delta_bar / gamma;
  r.nonconvex_holds = r.avg_grad_norm_sq <= r.nonconvex_rhs;

  r.final_gap = in.final_gap;
  r.pl_contraction = std::pow(1.0 - gamma * mu, t) * in.initial_gap;
  r.pl_rhs = r.pl_contraction + in.sigma_sq * gamma * l / (mu * g) +
             in.delta_bar * t / (gamma * mu);
  r.pl_holds = r.final_gap <= r.pl_rhs;
  return r;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, MetricSink* sink) {
  Simulation sim(spec);
  ExperimentResult result;
  result.rounds.reserve(static_cast<std::size_t>(spec.rounds));
  for (std::int64_t t = 0; t < spec.rounds; ++t) {
    result.rounds.push_back(sim.run_round());
    if (sink) sink->on_round(result.rounds.back());
  }
  for (std::size_t m = 0; m < spec.methods.size(); ++m) {
    result.final_points.push_back(sim.point(m));
  }
  result.mixture_direction = sim.mixture_direction();

  const KnownObjective* known = sim.task().known_objective();
  for (std::size_t m = 0; m < spec.methods.size(); ++m) {
    const std::string& label = spec.methods[m].label;
    if (!known) {
      result.theorems.push_back(theorem_not_applicable(label));
      continue;
    }
    TheoremInput in;
    in.method = label;
    in.initial_gap = *sim.initial_metrics()[m].loss_gap;
    in.grad_norms_sq.push_back(*sim.initial_metrics()[m].grad_norm_sq);
    double delta_sum = 0.0;
    for (std::size_t t = 0; t < result.rounds.size(); ++t) {
      const MethodRoundMetrics& r = result.rounds[t].methods[m];
      if (t + 1 < result.rounds.size()) in.grad_norms_sq.push_back(*r.grad_norm_sq);
      delta_sum += *r.true_delta;
    }
    in.final_gap = *result.rounds.back().methods[m].loss_gap;
    in.model_step = spec.model_step;
    in.smoothness = known->smoothness;
    in.pl_constant = known->pl_constant;
    in.sigma_sq = spec.noiseless ? 0.0 : known->gradient_variance(spec.batch_size);
    in.group_size = static_cast<Index>(sim.ideal_set().size());
    in.delta_bar = delta_sum / static_cast<double>(result.rounds.size());
    in.delta_source = "frank-wolfe-gap-true-objective";
    result.theorems.push_back(theorem_check(in));
  }
  return result;
}

}  // namespace meritfed
