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

#include "gp2bnn/bnn.hpp"

using namespace gp2bnn;

namespace {

PriorParams identity_prior(std::size_t width, double sb0, double sw0, double sbl,
                           double swl) {
  PriorParams p;
  p.width = width;
  p.sigma_b0 = sb0;
  p.sigma_w0 = sw0;
  p.sigma_bl = sbl;
  p.sigma_wl = swl;
  Rng rng(0);
  p.activation = make_activation("identity", rng);
  return p;
}

PriorParams nn_prior(std::size_t width, std::uint64_t act_seed) {
  PriorParams p;
  p.width = width;
  Rng rng(act_seed);
  p.activation = make_activation("nn:5:silu", rng);
  return p;
}

// nn:5:silu parameter layout: W1 [0..4], b1 [5..9], W2 [10..14], b2 [15]
ActivationModel negate_output(ActivationModel m) {
  for (std::size_t i = 10; i < 16; ++i) m.eta[i] = -m.eta[i];
  return m;
}

ActivationModel negate_input(ActivationModel m) {
  for (std::size_t i = 0; i < 5; ++i) m.eta[i] = -m.eta[i];
  return m;
}

ActivationModel scale_output(ActivationModel m, double alpha) {
  for (std::size_t i = 10; i < 16; ++i) m.eta[i] *= alpha;
  return m;
}

}  // namespace

TEST_CASE("sample_functions is deterministic with the right shape") {
  PriorParams p = nn_prior(16, 1);
  const InputSet xs = InputSet::linspace(-1.0, 1.0, 7);
  const FunctionBatch a = sample_functions(p, xs, 20, 5);
  const FunctionBatch b = sample_functions(p, xs, 20, 5);
  const FunctionBatch c = sample_functions(p, xs, 20, 6);
  REQUIRE(a.values.data() == b.values.data());
  REQUIRE(a.values.data() != c.values.data());
  REQUIRE(a.source == "bnn");
  REQUIRE(a.n_functions() == 20);
  REQUIRE(a.n_points() == 7);
}

TEST_CASE("prior validation") {
  PriorParams p = identity_prior(8, 1, 1, 1, 1);
  p.sigma_wl = 0.0;
  REQUIRE_THROWS_AS(p.validate(), BadConfig);
  p.sigma_wl = 1.0;
  p.width = 0;
  REQUIRE_THROWS_AS(p.validate(), DimMismatch);
  p.width = 8;
  const InputSet xs = InputSet::linspace(0.0, 1.0, 3);
  PriorParams q = identity_prior(8, 1, 1, 1, 1);
  q.input_dim = 2;
  REQUIRE_THROWS_AS(sample_functions(q, xs, 4, 0), DimMismatch);
}

TEST_CASE("mc_covariance argument checks") {
  PriorParams p = identity_prior(8, 1, 1, 1, 1);
  REQUIRE_THROWS_AS(mc_covariance(p, {0.0}, {1.0}, 1, 0), TooFewSamples);
  REQUIRE_THROWS_AS(mc_covariance(p, {0.0, 1.0}, {1.0, 2.0}, 100, 0), DimMismatch);
}

TEST_CASE("identity activation reproduces the linear kernel") {
  // cov(f(x), f(x')) = sbl^2 + swl^2 (sb0^2 + sw0^2 x x')
  PriorParams p = identity_prior(32, 0.8, 1.3, 0.6, 1.1);
  const double x = 0.7, x2 = -0.4;
  const double expect =
      0.6 * 0.6 + 1.1 * 1.1 * (0.8 * 0.8 + 1.3 * 1.3 * x * x2);
  const CovEstimate c = mc_covariance(p, {x}, {x2}, 200000, 99);
  REQUIRE(std::abs(c.estimate - expect) < 4.0 * c.std_error);

  const double var_expect = 0.6 * 0.6 + 1.1 * 1.1 * (0.8 * 0.8 + 1.3 * 1.3 * x * x);
  const CovEstimate v = mc_covariance(p, {x}, {x}, 200000, 100);
  REQUIRE(std::abs(v.estimate - var_expect) < 4.0 * v.std_error);
}

TEST_CASE("sample means are near zero") {
  PriorParams p = nn_prior(64, 2);
  const InputSet xs = InputSet::linspace(-2.0, 2.0, 5);
  const std::size_t n = 50000;
  const FunctionBatch batch = sample_functions(p, xs, n, 17);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double m = 0.0, v = 0.0;
    for (std::size_t s = 0; s < n; ++s) m += batch.values(s, i);
    m /= static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s) {
      const double d = batch.values(s, i) - m;
      v += d * d;
    }
    v /= static_cast<double>(n - 1);
    REQUIRE(std::abs(m) < 5.0 * std::sqrt(v / static_cast<double>(n)));
  }
}

TEST_CASE("negating the activation leaves the covariance unchanged") {
  PriorParams p = nn_prior(48, 3);
  PriorParams pn = p;
  pn.activation = negate_output(p.activation);
  const CovEstimate a = mc_covariance(p, {0.6}, {-0.9}, 40000, 7);
  const CovEstimate b = mc_covariance(pn, {0.6}, {-0.9}, 40000, 7);
  REQUIRE(std::abs(a.estimate - b.estimate) <
          3.0 * std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error));
}

TEST_CASE("flipping the activation argument leaves the covariance unchanged") {
  PriorParams p = nn_prior(48, 4);
  PriorParams pf = p;
  pf.activation = negate_input(p.activation);
  const CovEstimate a = mc_covariance(p, {0.6}, {-0.9}, 40000, 8);
  const CovEstimate b = mc_covariance(pf, {0.6}, {-0.9}, 40000, 8);
  REQUIRE(std::abs(a.estimate - b.estimate) <
          3.0 * std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error));
}

TEST_CASE("scaling the activation matches scaling the output weights") {
  const double alpha = 2.5;
  PriorParams p = nn_prior(48, 5);
  PriorParams ps = p;
  ps.activation = scale_output(p.activation, alpha);
  PriorParams pw = p;
  pw.sigma_wl *= alpha;
  const CovEstimate a = mc_covariance(ps, {0.3}, {1.2}, 40000, 9);
  const CovEstimate b = mc_covariance(pw, {0.3}, {1.2}, 40000, 10);
  REQUIRE(std::abs(a.estimate - b.estimate) <
          3.0 * std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error));
}

TEST_CASE("covariance estimates agree across widths") {
  PriorParams narrow = identity_prior(128, 1, 1, 1, 1);
  PriorParams wide = identity_prior(2048, 1, 1, 1, 1);
  Rng rng(6);
  narrow.activation = make_activation("tanh", rng);
  wide.activation = narrow.activation;
  const CovEstimate a = mc_covariance(narrow, {0.4}, {-0.2}, 20000, 11);
  const CovEstimate b = mc_covariance(wide, {0.4}, {-0.2}, 20000, 12);
  REQUIRE(std::abs(a.estimate - b.estimate) <
          5.0 * std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error));
}

TEST_CASE("standard error shrinks like one over sqrt n") {
  PriorParams p = nn_prior(16, 7);
  const CovEstimate small = mc_covariance(p, {0.5}, {0.1}, 10000, 13);
  const CovEstimate big = mc_covariance(p, {0.5}, {0.1}, 160000, 13);
  const double ratio = small.std_error / big.std_error;
  REQUIRE(ratio > 2.8);
  REQUIRE(ratio < 5.7);
}
