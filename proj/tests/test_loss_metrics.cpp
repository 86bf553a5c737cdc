// Copyright 2025 The gp2bnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "gp2bnn/loss_metrics.hpp"
#include "gp2bnn/rng.hpp"

using namespace gp2bnn;

namespace {

FunctionBatch batch_from(std::initializer_list<std::initializer_list<double>> rows) {
  FunctionBatch b;
  const std::size_t nr = rows.size();
  const std::size_t nc = rows.begin()->size();
  b.values = Matrix(nr, nc);
  std::size_t i = 0;
  for (const auto& row : rows) {
    std::size_t j = 0;
    for (double v : row) b.values(i, j++) = v;
    ++i;
  }
  b.source = "test";
  return b;
}

MomentSummary summary_1d(double mean, double var) {
  SymMatrix cov(1);
  cov.set(0, 0, var);
  return {{mean}, cov, 100};
}

FunctionBatch gaussian_batch(std::size_t n, std::size_t d, double mean, double sd,
                             std::uint64_t seed) {
  FunctionBatch b;
  b.values = Matrix(n, d);
  Rng rng(seed);
  for (auto& v : b.values.data()) v = mean + sd * rng.normal();
  b.source = "test";
  return b;
}

}  // namespace

TEST_CASE("moments of a tiny batch") {
  const FunctionBatch b = batch_from({{0.0, 0.0}, {2.0, 2.0}});
  const MomentSummary m = moments(b);
  REQUIRE(m.mean[0] == 1.0);
  REQUIRE(m.mean[1] == 1.0);
  REQUIRE(m.covariance(0, 0) == 2.0);
  REQUIRE(m.covariance(0, 1) == 2.0);
  REQUIRE(m.covariance(1, 1) == 2.0);
  REQUIRE(m.n_samples == 2);
  REQUIRE_THROWS_AS(moments(batch_from({{1.0, 2.0}})), TooFewSamples);
}

TEST_CASE("w2_gaussian matches the scalar closed form") {
  const MomentSummary a = summary_1d(0.0, 1.0);
  const MomentSummary b = summary_1d(1.0, 4.0);
  // (mu1-mu2)^2 + (s1-s2)^2 = 1 + 1 = 2
  REQUIRE(w2_gaussian(a, b, false) == Catch::Approx(2.0).margin(1e-10));

  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const MomentSummary p = summary_1d(rng.uniform(-2, 2), rng.uniform(0.1, 4.0));
    const MomentSummary q = summary_1d(rng.uniform(-2, 2), rng.uniform(0.1, 4.0));
    const double dm = p.mean[0] - q.mean[0];
    const double ds = std::sqrt(p.covariance(0, 0)) - std::sqrt(q.covariance(0, 0));
    REQUIRE(w2_gaussian(p, q, false) ==
            Catch::Approx(dm * dm + ds * ds).margin(1e-10));
  }
}

TEST_CASE("w2_gaussian on diagonal covariances sums per-coordinate terms") {
  Rng rng(5);
  const std::size_t d = 6;
  SymMatrix ca(d), cb(d);
  std::vector<double> mu_a(d), mu_b(d);
  double expect = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    mu_a[i] = rng.uniform(-1, 1);
    mu_b[i] = rng.uniform(-1, 1);
    const double va = rng.uniform(0.2, 3.0);
    const double vb = rng.uniform(0.2, 3.0);
    ca.set(i, i, va);
    cb.set(i, i, vb);
    const double dm = mu_a[i] - mu_b[i];
    const double ds = std::sqrt(va) - std::sqrt(vb);
    expect += dm * dm + ds * ds;
  }
  const MomentSummary a{mu_a, ca, 10};
  const MomentSummary b{mu_b, cb, 10};
  REQUIRE(w2_gaussian(a, b, false) == Catch::Approx(expect).margin(1e-8));
  REQUIRE(w2_gaussian(a, b, true) ==
          Catch::Approx(expect / static_cast<double>(d)).margin(1e-8));
}

TEST_CASE("w2_gaussian is symmetric and zero on identical summaries") {
  const FunctionBatch b = gaussian_batch(64, 4, 0.3, 1.2, 7);
  const MomentSummary m = moments(b);
  REQUIRE(w2_gaussian(m, m, false) >= 0.0);
  REQUIRE(w2_gaussian(m, m, false) < 1e-8);

  const MomentSummary m2 = moments(gaussian_batch(64, 4, -0.2, 0.7, 8));
  REQUIRE(w2_gaussian(m, m2, false) ==
          Catch::Approx(w2_gaussian(m2, m, false)).epsilon(1e-8));
  REQUIRE_THROWS_AS(w2_gaussian(m, summary_1d(0, 1), false), DimMismatch);
}

TEST_CASE("moment_regularizer separates equal and unequal distributions") {
  const FunctionBatch a = gaussian_batch(400, 8, 0.0, 1.0, 11);
  const FunctionBatch a2 = gaussian_batch(400, 8, 0.0, 1.0, 12);
  const FunctionBatch shifted = gaussian_batch(400, 8, 0.0, 2.0, 13);
  const double same = moment_regularizer(a, a2);
  const double diff = moment_regularizer(a, shifted);
  REQUIRE(moment_regularizer(a, a) == 0.0);
  REQUIRE(same < 0.1);
  REQUIRE(diff > 10.0 * same);

  const FunctionBatch constant = batch_from({{1.0, 1.0}, {1.0, 1.0}});
  REQUIRE_THROWS_AS(moment_regularizer(a, constant), DegenerateBatch);
}

TEST_CASE("empirical_w1 on hand-checked batches") {
  const FunctionBatch a = batch_from({{0.0}, {1.0}});
  const FunctionBatch b = batch_from({{1.0}, {2.0}});
  REQUIRE(empirical_w1(a, b) == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(empirical_w1(a, a) == 0.0);

  // unequal counts: quantile subsampling matches (0,1) against (0,0,1,1)
  const FunctionBatch c = batch_from({{0.0}, {0.0}, {1.0}, {1.0}});
  REQUIRE(empirical_w1(a, c) == Catch::Approx(0.0).margin(1e-12));

  const FunctionBatch wide = batch_from({{0.0, 0.0}, {1.0, 1.0}});
  REQUIRE_THROWS_AS(empirical_w1(a, wide), InputSetMismatch);
}

TEST_CASE("mmd on a hand-checked 2x2 case") {
  const FunctionBatch a = batch_from({{1.0, 0.0}, {0.0, 1.0}});
  const FunctionBatch b = batch_from({{1.0, 1.0}, {0.0, 0.0}});
  REQUIRE(mmd(a, b, MmdKernel::Linear).value == Catch::Approx(-1.0).margin(1e-12));
  REQUIRE(mmd(a, b, MmdKernel::Polynomial).value ==
          Catch::Approx(-2.375).margin(1e-12));
  const MmdResult r = mmd(a, b, MmdKernel::RBF);
  REQUIRE(r.bandwidth == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(r.value ==
          Catch::Approx(2.0 * std::exp(-1.0) - 2.0 * std::exp(-0.5)).margin(1e-12));
}

TEST_CASE("mmd separates equal and unequal distributions") {
  const FunctionBatch a = gaussian_batch(256, 6, 0.0, 1.0, 21);
  const FunctionBatch a2 = gaussian_batch(256, 6, 0.0, 1.0, 22);
  const FunctionBatch far = gaussian_batch(256, 6, 1.5, 1.0, 23);
  for (MmdKernel k : {MmdKernel::Linear, MmdKernel::Polynomial, MmdKernel::RBF}) {
    const double same = mmd(a, a2, k).value;
    const double diff = mmd(a, far, k).value;
    REQUIRE(diff > 0.0);
    REQUIRE(diff > 5.0 * std::abs(same));
  }
  REQUIRE_THROWS_AS(mmd(batch_from({{1.0}}), a, MmdKernel::Linear), InputSetMismatch);
}

TEST_CASE("pointwise discrepancies on a hand-checked case") {
  const FunctionBatch a = batch_from({{0.0, 0.0}, {2.0, 2.0}});
  const FunctionBatch b = batch_from({{1.0, 3.0}, {1.0, 5.0}});
  const PointwiseDiscrepancies p = pointwise_discrepancies(a, b);
  REQUIRE(p.mean_mse == Catch::Approx(4.5).margin(1e-12));
  REQUIRE(p.mean_l2 == Catch::Approx(std::sqrt(4.5)).margin(1e-12));
  REQUIRE(p.mean_l1 == Catch::Approx(1.5).margin(1e-12));
  REQUIRE(p.median_mse == Catch::Approx(4.5).margin(1e-12));
  REQUIRE(p.median_l1 == Catch::Approx(1.5).margin(1e-12));
}

TEST_CASE("metric_report fills every field consistently") {
  const FunctionBatch a = gaussian_batch(128, 5, 0.0, 1.0, 31);
  const FunctionBatch b = gaussian_batch(96, 5, 0.5, 1.3, 32);
  const MetricReport r = metric_report(a, b);
  REQUIRE(r.w1 > 0.0);
  REQUIRE(r.w2 > 0.0);
  REQUIRE(std::isfinite(r.mmd_linear));
  REQUIRE(std::isfinite(r.mmd_poly));
  REQUIRE(std::isfinite(r.mmd_rbf));
  REQUIRE(r.rbf_bandwidth > 0.0);
  REQUIRE(r.mean_l2 == Catch::Approx(std::sqrt(r.mean_mse)).epsilon(1e-12));
  REQUIRE(r.median_l2 == Catch::Approx(std::sqrt(r.median_mse)).epsilon(1e-12));
  REQUIRE(r.n_functions_a == 128);
  REQUIRE(r.n_functions_b == 96);
  REQUIRE(r.n_points == 5);
}

TEST_CASE("gp batches from the same kernel score close, different kernels far") {
  KernelSpec k;
  k.lengthscale = 0.8;
  const InputSet xs = InputSet::linspace(-2.0, 2.0, 12);
  const FunctionBatch a = sample_gp(k, xs, 2048, 41);
  const FunctionBatch b = sample_gp(k, xs, 2048, 42);
  KernelSpec shorter = k;
  shorter.lengthscale = 0.15;
  const FunctionBatch c = sample_gp(shorter, xs, 2048, 43);

  const double w2_same = w2_gaussian(moments(a), moments(b), true);
  const double w2_diff = w2_gaussian(moments(a), moments(c), true);
  REQUIRE(w2_same < 0.05);
  REQUIRE(w2_diff > 4.0 * w2_same);

  // marginals only differ through the amplitude, not the lengthscale
  KernelSpec louder = k;
  louder.amplitude = 2.0;
  const FunctionBatch d = sample_gp(louder, xs, 2048, 44);
  const double w1_same = empirical_w1(a, b);
  const double w1_diff = empirical_w1(a, d);
  REQUIRE(w1_diff > 4.0 * w1_same);
}
