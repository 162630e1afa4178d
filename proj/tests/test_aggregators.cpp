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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "meritfed/aggregators.hpp"
#include "meritfed/error.hpp"
#include "meritfed/rng.hpp"
#include "meritfed/tasks.hpp"
#include "support.hpp"

namespace mf = meritfed;
using mf::Index;
using mf::Matrix;
using mf::Vector;
using mf::testing::QuadraticOracle;
using mf::testing::is_simplex;
using mf::testing::random_normal;

namespace {

template <typename F>
mf::ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const mf::Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return mf::ErrorCode::kIo;
}

mf::GradientSet make_grads(Matrix m) {
  mf::GradientSet g;
  g.messages = std::move(m);
  return g;
}

}  // namespace

TEST_SUITE("aggregators") {

TEST_CASE("full and ideal averaging") {
  const auto full = mf::weights_sgd_full(150);
  for (Index i = 0; i < 150; ++i) CHECK(full[i] == mf::uniform_weights(150)[i]);
  CHECK(mf::weights_sgd_full(1)[0] == 1.0);

  const std::vector<Index> first5{0, 1, 2, 3, 4};
  const auto ideal = mf::weights_sgd_ideal(first5, 150);
  for (Index i = 0; i < 5; ++i) CHECK(ideal[i] == doctest::Approx(0.2));
  CHECK(ideal.values().tail(145).isZero());

  const std::vector<Index> single{0};
  const auto one = mf::weights_sgd_ideal(single, 5);
  CHECK(one[0] == 1.0);
  CHECK(one.values().tail(4).isZero());

  const std::vector<Index> all{0, 1, 2, 3};
  CHECK(mf::weights_sgd_ideal(all, 4).values() == mf::weights_sgd_full(4).values());
  CHECK(code_of([] { mf::weights_sgd_ideal(std::vector<Index>{}, 3); }) ==
        mf::ErrorCode::kConfig);
}

TEST_CASE("angles") {
  Vector a(3);
  a << 1.0, -2.0, 0.5;
  CHECK(mf::angle(a, a) == doctest::Approx(0.0));
  CHECK(mf::angle(a, -a) == doctest::Approx(std::numbers::pi));
  Vector e1(2), e2(2);
  e1 << 1.0, 0.0;
  e2 << 0.0, 1.0;
  CHECK(mf::angle(e1, e2) == doctest::Approx(std::numbers::pi / 2));
  CHECK(code_of([&] { mf::angle(a, Vector::Zero(3)); }) == mf::ErrorCode::kUndefinedAngle);
}

TEST_CASE("fedadp") {
  SUBCASE("gompertz ratio for opposite gradients") {
    Matrix m(2, 2);
    m << 1.0, -1.0, 0.0, 0.0;
    mf::MethodState state;
    const auto w = mf::weights_fedadp(make_grads(m), 0, state, 5.0);
    const long double pi = 3.141592653589793238462643383279502884L;
    const long double g0 = 5.0L * (1.0L - std::exp(-std::exp(0.0L)));
    const long double gpi = 5.0L * (1.0L - std::exp(-std::exp(-5.0L * pi)));
    CHECK(static_cast<double>(g0) == doctest::Approx(3.16060).epsilon(1e-5));
    CHECK(static_cast<double>(gpi) == doctest::Approx(7.55e-7).epsilon(1e-2));
    const double ratio = static_cast<double>(std::exp(g0 - gpi));
    CHECK(w[0] / w[1] == doctest::Approx(ratio).epsilon(1e-12));
    CHECK(w[0] / w[1] == doctest::Approx(23.59).epsilon(1e-3));
  }

  SUBCASE("identical gradients give uniform weights") {
    Matrix m(3, 4);
    m.colwise() = Vector::LinSpaced(3, 1.0, 2.0);
    mf::MethodState state;
    const auto w = mf::weights_fedadp(make_grads(m), 0, state, 5.0);
    for (Index i = 0; i < 4; ++i) CHECK(w[i] == doctest::Approx(0.25).epsilon(1e-15));
  }

  SUBCASE("target weight is maximal and scale does not matter") {
    std::mt19937_64 gen(12);
    for (int trial = 0; trial < 20; ++trial) {
      Matrix m = random_normal(4, 6, gen);
      mf::MethodState s1;
      mf::MethodState s2;
      const auto w = mf::weights_fedadp(make_grads(m), 0, s1, 5.0);
      CHECK(is_simplex(w.values()));
      CHECK(w[0] == doctest::Approx(w.values().maxCoeff()).epsilon(1e-15));
      m.col(3) *= 2.0;
      const auto w2 = mf::weights_fedadp(make_grads(m), 0, s2, 5.0);
      CHECK((w.values() - w2.values()).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  SUBCASE("running-mean smoothing") {
    Matrix first(2, 2), second(2, 2);
    first << 1.0, 1.0, 0.0, 0.0;    // angles 0, 0
    second << 1.0, 0.0, 0.0, 1.0;   // angles 0, pi/2
    mf::MethodState state;
    mf::weights_fedadp(make_grads(first), 0, state, 5.0);
    const auto w = mf::weights_fedadp(make_grads(second), 0, state, 5.0);
    REQUIRE(state.smoothed_angles.size() == 2);
    CHECK(state.smoothed_angles[1] == doctest::Approx(std::numbers::pi / 4));
    CHECK(state.rounds == 2);
    const double expected =
        std::exp(mf::gompertz(0.0, 5.0) - mf::gompertz(std::numbers::pi / 4, 5.0));
    CHECK(w[0] / w[1] == doctest::Approx(expected));

    mf::MethodState raw;
    mf::weights_fedadp(make_grads(first), 0, raw, 5.0, mf::AngleSmoothing::kNone);
    mf::weights_fedadp(make_grads(second), 0, raw, 5.0, mf::AngleSmoothing::kNone);
    CHECK(raw.smoothed_angles[1] == doctest::Approx(std::numbers::pi / 2));
  }

  SUBCASE("zero target gradient") {
    Matrix m = Matrix::Ones(2, 3);
    m.col(0).setZero();
    mf::MethodState state;
    CHECK(code_of([&] { mf::weights_fedadp(make_grads(m), 0, state, 5.0); }) ==
          mf::ErrorCode::kUndefinedAngle);
  }
}

TEST_CASE("tawt") {
  SUBCASE("identical gradients stay uniform") {
    Matrix m(2, 5);
    m.colwise() = Vector::Ones(2);
    mf::MethodState state;
    for (int round = 0; round < 10; ++round) {
      const auto w = mf::weights_tawt(make_grads(m), 0, state, 1.0, 1.0);
      for (Index i = 0; i < 5; ++i) CHECK(w[i] == doctest::Approx(0.2).epsilon(1e-14));
    }
  }

  SUBCASE("opposing client loses mass every step") {
    Matrix m(2, 3);
    m << 1.0, -1.0, 1.0, 2.0, -2.0, 0.0;
    mf::MethodState state;
    double previous_ratio = 1.0;
    for (int round = 0; round < 5; ++round) {
      const auto w = mf::weights_tawt(make_grads(m), 0, state, 1.0, 1.0);
      CHECK(is_simplex(w.values()));
      const double ratio = w[1] / w[0];
      CHECK(ratio < previous_ratio);
      // Pseudo-gradients -1 and +1 differ by 2 each step.
      CHECK(ratio == doctest::Approx(std::exp(-2.0 * (round + 1))));
      previous_ratio = ratio;
    }
    REQUIRE(state.previous.has_value());
  }

  SUBCASE("angle measure") {
    Matrix m(2, 2);
    m << 1.0, 0.0, 0.0, 1.0;
    mf::MethodState state;
    const auto w = mf::weights_tawt(make_grads(m), 0, state, 1.0, 1.0, mf::TawtMeasure::kAngle);
    // Pseudo-gradients -0 and -pi/2.
    CHECK(w[1] / w[0] == doctest::Approx(std::exp(std::numbers::pi / 2)));
  }

  SUBCASE("scale invariance") {
    std::mt19937_64 gen(5);
    Matrix m = random_normal(3, 4, gen);
    mf::MethodState s1;
    mf::MethodState s2;
    const auto w1 = mf::weights_tawt(make_grads(m), 0, s1, 2.0, 1.0);
    m.col(2) *= 2.0;
    const auto w2 = mf::weights_tawt(make_grads(m), 0, s2, 2.0, 1.0);
    CHECK((w1.values() - w2.values()).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("fedavg with client sampling") {
  mf::Rng rng(8);
  CHECK(mf::weights_fedavg_sampled(7, 7, rng).values() == mf::weights_sgd_full(7).values());
  const auto one = mf::weights_fedavg_sampled(7, 1, rng);
  CHECK((one.values().array() == 1.0).count() == 1);
  CHECK((one.values().array() == 0.0).count() == 6);

  const Index n = 10;
  const Index k = 5;
  const int rounds = 100000;
  std::vector<int> hits(n, 0);
  for (int r = 0; r < rounds; ++r) {
    const auto w = mf::weights_fedavg_sampled(n, k, rng);
    for (Index i = 0; i < n; ++i) {
      if (w[i] > 0.0) {
        CHECK(w[i] == 1.0 / k);
        ++hits[static_cast<std::size_t>(i)];
      }
    }
  }
  const double p = static_cast<double>(k) / n;
  const double se = std::sqrt(p * (1 - p) / rounds);
  double chi2 = 0.0;
  for (int h : hits) {
    const double freq = h / static_cast<double>(rounds);
    CHECK(std::abs(freq - p) <= 3.0 * se);
    chi2 += (freq - p) * (freq - p) / (se * se);
  }
  // Counts sum to K * rounds with pairwise correlation -1/(n-1), so the
  // statistic is n/(n-1) times chi-square with n-1 dof; 0.999 quantile.
  CHECK(chi2 <= 10.0 / 9.0 * 27.88);

  CHECK(code_of([&] { mf::weights_fedavg_sampled(5, 0, rng); }) == mf::ErrorCode::kConfig);
  CHECK(code_of([&] { mf::weights_fedavg_sampled(5, 6, rng); }) == mf::ErrorCode::kConfig);
}

TEST_CASE("meritfed weights") {
  SUBCASE("two-client instance") {
    const QuadraticOracle oracle(Vector::Zero(1));
    Matrix m(1, 2);
    m << 2.0, -2.0;
    mf::Rng rng(1);
    const auto sol = mf::weights_meritfed(Vector::Ones(1), make_grads(m), 0.25,
                                          mf::MdConfig{1.0, 200}, oracle, rng);
    CHECK(sol.weights[0] >= 0.99);
    CHECK(sol.value <= 0.2501);
  }

  const Index d = 4;
  mf::DistributionSpec spec;
  spec.center = Vector::Zero(d);
  const mf::MeanEstimationTask task(spec);
  mf::Rng data_rng(21);
  const auto validation = mf::generate_gaussian_shard(spec, 50, 0, data_rng);
  const mf::ValidationOracle oracle(task, validation, mf::ValidationMode::kExtraValidation);
  const Vector x = Vector::Constant(d, 0.7);

  SUBCASE("identical gradients keep uniform weights") {
    Matrix m(d, 6);
    m.colwise() = task.loss_grad(x, validation).grad;
    mf::Rng rng(2);
    const auto sol =
        mf::weights_meritfed(x, make_grads(m), 0.1, mf::MdConfig{3.5, 50}, oracle, rng);
    for (Index i = 0; i < 6; ++i) CHECK(sol.weights[i] == doctest::Approx(1.0 / 6).epsilon(1e-12));
  }

  std::mt19937_64 gen(31);
  const Matrix g = random_normal(d, 5, gen);

  SUBCASE("duplicated validation set") {
    mf::DatasetShard doubled = validation;
    doubled.features.resize(d, 100);
    doubled.features << validation.features, validation.features;
    const mf::ValidationOracle oracle2(task, doubled, mf::ValidationMode::kExtraValidation);
    mf::Rng r1(3), r2(3);
    const auto a = mf::weights_meritfed(x, make_grads(g), 0.1, mf::MdConfig{3.5, 50}, oracle, r1);
    const auto b = mf::weights_meritfed(x, make_grads(g), 0.1, mf::MdConfig{3.5, 50}, oracle2, r2);
    CHECK((a.weights.values() - b.weights.values()).cwiseAbs().maxCoeff() <= 1e-12);
  }

  SUBCASE("permuting clients permutes the weights") {
    const std::vector<Index> perm{3, 0, 4, 1, 2};
    Matrix gp(d, 5);
    for (Index k = 0; k < 5; ++k) gp.col(k) = g.col(perm[static_cast<std::size_t>(k)]);
    mf::Rng r1(4), r2(4);
    const auto a = mf::weights_meritfed(x, make_grads(g), 0.1, mf::MdConfig{3.5, 50}, oracle, r1);
    const auto b = mf::weights_meritfed(x, make_grads(gp), 0.1, mf::MdConfig{3.5, 50}, oracle, r2);
    for (Index k = 0; k < 5; ++k) {
      CHECK(b.weights[k] == doctest::Approx(a.weights[perm[static_cast<std::size_t>(k)]]).epsilon(1e-12));
    }
  }
}

TEST_CASE("meritfed is never worse than a fixed comparator") {
  std::mt19937_64 gen(41);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 3 + trial % 4;
    const Index d = 3;
    const QuadraticOracle oracle(random_normal(d, gen));
    const auto grads = make_grads(random_normal(d, n, gen));
    const Vector x = random_normal(d, gen);
    const double gamma = 0.1;
    const double lphi = 2.0 * gamma * gamma * grads.messages.colwise().squaredNorm().maxCoeff();
    mf::Rng rng(static_cast<std::uint64_t>(trial));
    const auto sol = mf::weights_meritfed(x, grads, gamma, mf::MdConfig{1.0 / lphi, 200}, oracle, rng);
    const std::vector<Index> ideal{0, 1};
    const auto w_ideal = mf::weights_sgd_ideal(ideal, n);
    const double phi_ideal = oracle.loss(x - gamma * grads.combine(w_ideal.values()));
    CHECK(is_simplex(sol.weights.values()));
    CHECK(sol.value <= phi_ideal + sol.delta + 1e-3);
    CHECK(sol.value <= oracle.loss(x - gamma * grads.combine(mf::weights_sgd_full(n).values())) +
                           sol.delta + 1e-3);
  }
}

TEST_CASE("model update") {
  Matrix m(2, 3);
  m << 1.0, 2.0, 3.0, -1.0, 0.0, 4.0;
  const auto grads = make_grads(m);
  Vector x(2);
  x << 0.5, 0.5;
  const auto one_hot = mf::SimplexWeights::from_values(Vector::Unit(3, 2));
  CHECK(mf::apply_update(x, grads, one_hot, 0.1) == x - 0.1 * m.col(2));
  CHECK(mf::apply_update(x, make_grads(Matrix::Zero(2, 3)), mf::uniform_weights(3), 0.1) == x);
  const Vector parallel = x - 0.1 * m.rowwise().mean();
  CHECK((mf::apply_update(x, grads, mf::uniform_weights(3), 0.1) - parallel).norm() <= 1e-15);
  CHECK(code_of([&] { mf::apply_update(Vector::Zero(3), grads, mf::uniform_weights(3), 0.1); }) ==
        mf::ErrorCode::kShape);
}

TEST_CASE("aggregator configuration") {
  mf::MethodConfig cfg;
  cfg.model_step = 0.0;
  CHECK(code_of([&] { cfg.validate(4); }) == mf::ErrorCode::kConfig);
  cfg = {};
  cfg.kind = mf::MethodKind::kFedAvgSampled;
  cfg.sampled_clients = 5;
  CHECK(code_of([&] { cfg.validate(4); }) == mf::ErrorCode::kConfig);
  cfg = {};
  cfg.kind = mf::MethodKind::kSgdIdeal;
  CHECK(code_of([&] { mf::Aggregator(cfg, 4, 0, {}); }) == mf::ErrorCode::kConfig);

  cfg.kind = mf::MethodKind::kTawt;
  mf::Aggregator tawt(cfg, 3, 0, {0});
  const QuadraticOracle oracle(Vector::Zero(2));
  mf::Rng rng(1);
  Matrix m(2, 3);
  m << 1.0, -1.0, 1.0, 0.0, 0.0, 1.0;
  for (int round = 0; round < 3; ++round) {
    const auto out = tawt.aggregate(Vector::Zero(2), make_grads(m), oracle, rng);
    CHECK(is_simplex(out.weights.values()));
    CHECK(out.delta == 0.0);
  }
  CHECK(tawt.state().previous.has_value());
}

}  // TEST_SUITE
