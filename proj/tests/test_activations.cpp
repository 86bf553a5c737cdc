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

#include "gp2bnn/activations.hpp"

using namespace gp2bnn;

namespace {

// central finite differences against act_grad at random probes
void check_fd(const std::string& spec, std::uint64_t seed, int n_probes = 20) {
  Rng rng(seed);
  ActivationModel m = make_activation(spec, rng);
  const double h = 1e-5;
  int done = 0;
  while (done < n_probes) {
    const double x = rng.uniform(-2.0, 2.0);
    if (m.kind == ActKind::PiecewiseLinear) {
      bool near_break = false;
      for (int i = 0; i < m.n_break; ++i)
        if (std::abs(x - m.eta[i]) < 1e-3) near_break = true;
      if (near_break) continue;
    }
    if (m.kind == ActKind::Fixed && m.fixed == FixedFn::ReLU && std::abs(x) < 1e-3)
      continue;

    const ActGrad g = act_grad(m, x);
    const double fd_dx = (act_eval(m, x + h) - act_eval(m, x - h)) / (2.0 * h);
    const double tol_dx = 1e-4 * std::max(std::abs(g.dx), 1.0) + 1e-6;
    REQUIRE(std::abs(g.dx - fd_dx) < tol_dx);

    for (std::size_t p = 0; p < m.param_count(); ++p) {
      ActivationModel mp = m;
      mp.eta[p] += h;
      ActivationModel mm = m;
      mm.eta[p] -= h;
      const double fd = (act_eval(mp, x) - act_eval(mm, x)) / (2.0 * h);
      const double tol = 1e-4 * std::max(std::abs(g.deta[p]), 1.0) + 1e-6;
      REQUIRE(std::abs(g.deta[p] - fd) < tol);
    }
    ++done;
  }
}

}  // namespace

TEST_CASE("fixed activations take hand-checked values") {
  Rng rng(1);
  REQUIRE(act_eval(make_activation("relu", rng), -1.0) == 0.0);
  REQUIRE(act_eval(make_activation("relu", rng), 2.0) == 2.0);
  REQUIRE(act_eval(make_activation("tanh", rng), 0.0) == 0.0);
  REQUIRE(act_eval(make_activation("silu", rng), 1.0) ==
          Catch::Approx(0.7310585786300049).epsilon(1e-14));
  REQUIRE(act_eval(make_activation("rbf", rng), 0.0) == 1.0);
  REQUIRE(act_eval(make_activation("rbf", rng), 1.0) ==
          Catch::Approx(std::exp(-1.0)).epsilon(1e-14));
  REQUIRE(act_eval(make_activation("erf", rng), 0.5) ==
          Catch::Approx(0.5204998778130465).epsilon(1e-12));
  REQUIRE(act_eval(make_activation("identity", rng), 3.7) == 3.7);
}

TEST_CASE("parameter counts per kind") {
  Rng rng(2);
  REQUIRE(make_activation("relu", rng).param_count() == 0);
  REQUIRE(make_activation("nn:5:silu", rng).param_count() == 16);
  REQUIRE(make_activation("nn:10:10:silu", rng).param_count() == 141);
  REQUIRE(make_activation("rational:5:4", rng).param_count() == 10);
  REQUIRE(make_activation("pwl:8", rng).param_count() == 18);
  REQUIRE(make_activation("fourier:5", rng).param_count() == 20);
}

TEST_CASE("fourier activation with a unit sine component") {
  Rng rng(3);
  ActivationModel m = make_activation("fourier:1", rng);
  // layout: psi_cos, psi_sin, A_cos, A_sin
  m.eta = {1.0, 1.0, 0.0, 1.0};
  REQUIRE(act_eval(m, 0.25) == Catch::Approx(1.0).epsilon(1e-14));
  REQUIRE(act_eval(m, 0.0) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("fourier activation with integer frequencies has period one") {
  Rng rng(4);
  ActivationModel m = make_activation("fourier:2", rng);
  m.eta = {1.0, 2.0, 1.0, 2.0, 0.4, -0.2, 0.3, 0.1};
  for (double x : {-0.7, 0.0, 0.31, 1.9}) {
    REQUIRE(act_eval(m, x + 1.0) == Catch::Approx(act_eval(m, x)).margin(1e-12));
  }
}

TEST_CASE("piecewise linear activation interpolates and extrapolates") {
  Rng rng(5);
  ActivationModel m = make_activation("pwl:2", rng);
  // breakpoints (-1, 1), values (1, 2), tail slopes (0.5, -2)
  m.eta = {-1.0, 1.0, 1.0, 2.0, 0.5, -2.0};
  REQUIRE(act_eval(m, 0.0) == Catch::Approx(1.5).epsilon(1e-14));
  REQUIRE(act_eval(m, 0.5) == Catch::Approx(1.75).epsilon(1e-14));
  REQUIRE(act_eval(m, -3.0) == Catch::Approx(1.0 + 0.5 * -2.0).epsilon(1e-14));
  REQUIRE(act_eval(m, 5.0) == Catch::Approx(2.0 + -2.0 * 4.0).epsilon(1e-14));
  // breakpoint order in eta must not matter
  ActivationModel swapped = m;
  swapped.eta = {1.0, -1.0, 2.0, 1.0, 0.5, -2.0};
  REQUIRE(act_eval(swapped, 0.5) == Catch::Approx(1.75).epsilon(1e-14));
}

TEST_CASE("tiny nn activation matches its formula") {
  Rng rng(6);
  ActivationModel m = make_activation("nn:1:tanh", rng);
  m.eta = {2.0, 0.1, 1.5, -0.2};  // w1, b1, w2, b2
  const double expect = 1.5 * std::tanh(2.0 * 0.3 + 0.1) - 0.2;
  REQUIRE(act_eval(m, 0.3) == Catch::Approx(expect).epsilon(1e-14));
}

TEST_CASE("rational activation matches its formula") {
  Rng rng(7);
  ActivationModel m = make_activation("rational:1:1", rng);
  m.eta = {1.0, 2.0, 3.0};  // (1 + 2x) / (1 + |3x|)
  REQUIRE(act_eval(m, 0.5) == Catch::Approx(0.8).epsilon(1e-14));
  REQUIRE(act_eval(m, -0.5) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("gradients match finite differences for every kind") {
  check_fd("relu", 10);
  check_fd("tanh", 11);
  check_fd("silu", 12);
  check_fd("rbf", 13);
  check_fd("erf", 14);
  check_fd("identity", 15);
  check_fd("nn:5:silu", 16);
  check_fd("nn:10:10:silu", 17);
  check_fd("nn:4:tanh", 18);
  check_fd("rational:5:4", 19);
  check_fd("pwl:8", 20);
  check_fd("fourier:5", 21);
}

TEST_CASE("activations stay finite over the admissible range") {
  Rng rng(22);
  for (const char* spec :
       {"relu", "tanh", "silu", "rbf", "erf", "identity", "nn:5:silu", "nn:10:10:silu",
        "rational:5:4", "pwl:8", "fourier:5"}) {
    ActivationModel m = make_activation(spec, rng);
    // push parameters toward the admissible boundary
    for (auto& e : m.eta) e = rng.uniform(-1.0, 1.0) * 300.0;
    for (double x : {-1000.0, -31.7, -1.0, 0.0, 0.5, 42.0, 1000.0}) {
      const ActEval v = act_eval_dx(m, x);
      REQUIRE(std::isfinite(v.value));
      REQUIRE(std::isfinite(v.dx));
    }
  }
}

TEST_CASE("activation construction is deterministic per seed") {
  Rng a(33), b(33), c(34);
  const ActivationModel ma = make_activation("nn:5:silu", a);
  const ActivationModel mb = make_activation("nn:5:silu", b);
  const ActivationModel mc = make_activation("nn:5:silu", c);
  REQUIRE(ma.eta == mb.eta);
  REQUIRE(ma.eta != mc.eta);
}

TEST_CASE("malformed activation specs are rejected") {
  Rng rng(44);
  REQUIRE_THROWS_AS(make_activation("", rng), BadActivationSpec);
  REQUIRE_THROWS_AS(make_activation("nn:", rng), BadActivationSpec);
  REQUIRE_THROWS_AS(make_activation("nn:5", rng), BadActivationSpec);
  REQUIRE_THROWS_AS(make_activation("nn:5:swish", rng), BadActivationSpec);
  REQUIRE_THROWS_AS(make_activation("rational:9", rng), BadActivationSpec);
  REQUIRE_THROWS_AS(make_activation("pwl:1", rng), BadActivationSpec);
  REQUIRE_THROWS_AS(make_activation("fourier:0", rng), BadActivationSpec);
  REQUIRE_THROWS_AS(make_activation("softplus", rng), BadActivationSpec);
}

TEST_CASE("act_eval_dx agrees with act_eval and act_grad") {
  Rng rng(55);
  for (const char* spec : {"silu", "nn:5:silu", "rational:3:2", "pwl:4", "fourier:3"}) {
    ActivationModel m = make_activation(spec, rng);
    for (int i = 0; i < 5; ++i) {
      const double x = rng.uniform(-2.0, 2.0);
      const ActEval e = act_eval_dx(m, x);
      REQUIRE(e.value == act_eval(m, x));
      REQUIRE(e.dx == act_grad(m, x).dx);
    }
  }
}
