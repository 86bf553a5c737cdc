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
#include <vector>

#include "gp2bnn/hypernet.hpp"

using namespace gp2bnn;

TEST_CASE("hypernet parameter count follows the layer sizes") {
  Hypernetwork h;
  h.n_eta = 16;
  // (1+1)*128 + (128+1)*32 + (32+1)*8 + (8+1)*20
  CHECK(h.theta_size() == 256 + 4128 + 264 + 180);
  CHECK(h.out_size() == 20);

  Hypernetwork small;
  small.hidden = {6, 5, 4};
  small.n_eta = 3;
  // (1+1)*6 + (6+1)*5 + (5+1)*4 + (4+1)*7
  CHECK(small.theta_size() == 12 + 35 + 24 + 35);
}

TEST_CASE("single-unit forward matches the bump formula") {
  Hypernetwork h;
  h.hidden = {1};
  h.n_eta = 0;
  REQUIRE(h.theta_size() == 10);
  // layout: w1, b1, head W (4x1), head bias (4)
  const std::vector<double> theta = {0.5, 0.25, 1.0, -1.0, 2.0, 0.5, 0.1, 0.2, 0.3, 0.4};
  const double gamma = std::exp(1.0);  // t = 1

  std::vector<double> out(4);
  Hypernetwork::Cache cache;
  h.forward(theta, gamma, out.data(), cache);

  const double z = 0.5 * 1.0 + 0.25;
  const double a = std::exp(-z * z);
  CHECK(out[0] == Catch::Approx(1.0 * a + 0.1).margin(1e-12));
  CHECK(out[1] == Catch::Approx(-1.0 * a + 0.2).margin(1e-12));
  CHECK(out[2] == Catch::Approx(2.0 * a + 0.3).margin(1e-12));
  CHECK(out[3] == Catch::Approx(0.5 * a + 0.4).margin(1e-12));
  CHECK(cache.t == Catch::Approx(1.0).margin(1e-12));
  CHECK(cache.a[0][0] == Catch::Approx(a).margin(1e-14));
}

TEST_CASE("hypernet backward matches finite differences") {
  Hypernetwork h;
  h.hidden = {6, 5, 4};
  ActivationModel act;
  act.kind = ActKind::Rational;
  act.deg_num = 1;
  act.deg_den = 1;
  act.eta.assign(3, 0.0);
  h.n_eta = act.param_count();
  REQUIRE(h.n_eta == 3);

  Rng rng(404);
  const std::vector<double> theta = h.init_theta(act, rng);
  std::vector<double> c(h.out_size());
  for (auto& v : c) v = rng.normal();

  for (double gamma : {0.3, 2.0}) {
    DYNAMIC_SECTION("gamma " << gamma) {
      std::vector<double> out(h.out_size());
      Hypernetwork::Cache cache;
      h.forward(theta, gamma, out.data(), cache);
      std::vector<double> dtheta(theta.size(), 0.0);
      h.backward(theta, cache, c.data(), dtheta);

      const double hstep = 1e-6;
      for (std::size_t i = 0; i < theta.size(); ++i) {
        std::vector<double> tp = theta, tm = theta;
        tp[i] += hstep;
        tm[i] -= hstep;
        Hypernetwork::Cache scratch;
        std::vector<double> op(h.out_size()), om(h.out_size());
        h.forward(tp, gamma, op.data(), scratch);
        h.forward(tm, gamma, om.data(), scratch);
        double lp = 0.0, lm = 0.0;
        for (std::size_t k = 0; k < h.out_size(); ++k) {
          lp += c[k] * op[k];
          lm += c[k] * om[k];
        }
        const double fd = (lp - lm) / (2.0 * hstep);
        INFO("theta coordinate " << i);
        CHECK(dtheta[i] == Catch::Approx(fd).margin(1e-6 * std::max(1.0, std::abs(fd))));
      }
    }
  }
}

TEST_CASE("backward accumulates into the gradient buffer") {
  Hypernetwork h;
  h.hidden = {3};
  h.n_eta = 0;
  Rng rng(7);
  ActivationModel fixed;  // defaults to a fixed activation with no parameters
  const std::vector<double> theta = h.init_theta(fixed, rng);
  std::vector<double> out(4);
  Hypernetwork::Cache cache;
  h.forward(theta, 1.5, out.data(), cache);

  std::vector<double> dout = {1.0, -0.5, 0.25, 2.0};
  std::vector<double> once(theta.size(), 0.0), twice(theta.size(), 0.0);
  h.backward(theta, cache, dout.data(), once);
  h.backward(theta, cache, dout.data(), twice);
  h.backward(theta, cache, dout.data(), twice);
  for (std::size_t i = 0; i < theta.size(); ++i)
    CHECK(twice[i] == Catch::Approx(2.0 * once[i]).margin(1e-15));
}

TEST_CASE("initialization starts near the template configuration") {
  Hypernetwork h;
  ActivationModel act;
  act.kind = ActKind::PiecewiseLinear;
  act.n_break = 4;
  act.eta.assign(act.param_count(), 0.0);
  h.n_eta = act.param_count();

  Rng rng(2025);
  const std::vector<double> theta = h.init_theta(act, rng);
  REQUIRE(theta.size() == h.theta_size());

  // same seed, same weights
  Rng rng2(2025);
  const std::vector<double> again = h.init_theta(act, rng2);
  CHECK(theta == again);

  // log scales stay close to zero across the whole gamma range
  std::vector<double> out(h.out_size());
  Hypernetwork::Cache cache;
  for (double gamma : {0.25, 1.0, 4.0}) {
    h.forward(theta, gamma, out.data(), cache);
    for (int i = 0; i < 4; ++i) {
      INFO("gamma " << gamma << " scale output " << i);
      CHECK(std::abs(out[i]) < 0.5);
    }
    for (std::size_t i = 0; i < h.out_size(); ++i) CHECK(std::isfinite(out[i]));
  }
}

TEST_CASE("hypernet rejects bad inputs") {
  Hypernetwork h;
  h.hidden = {3};
  h.n_eta = 2;
  std::vector<double> out(h.out_size());
  Hypernetwork::Cache cache;
  std::vector<double> theta(h.theta_size(), 0.1);

  std::vector<double> short_theta(h.theta_size() - 1, 0.1);
  CHECK_THROWS_AS(h.forward(short_theta, 1.0, out.data(), cache), DimMismatch);
  CHECK_THROWS_AS(h.forward(theta, 0.0, out.data(), cache), BadConfig);
  CHECK_THROWS_AS(h.forward(theta, -2.0, out.data(), cache), BadConfig);

  ActivationModel wrong;
  wrong.kind = ActKind::PeriodicFourier;
  wrong.n_freq = 5;
  wrong.eta.assign(wrong.param_count(), 0.0);
  Rng rng(1);
  CHECK_THROWS_AS(h.init_theta(wrong, rng), BadConfig);
}
