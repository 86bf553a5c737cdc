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

#ifndef GP2BNN_HYPERNET_HPP
#define GP2BNN_HYPERNET_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "gp2bnn/activations.hpp"
#include "gp2bnn/errors.hpp"
#include "gp2bnn/rng.hpp"

namespace gp2bnn {

// Conditions a prior on a kernel lengthscale gamma.  A small MLP
// (hidden widths 128/32/8, Gaussian-bump units exp(-u^2)) maps log(gamma)
// to the four log weight scales plus the activation parameters:
//   [log sigma_b0, log sigma_w0, log sigma_bl, log sigma_wl, eta...]
//
// Weight layout: W1 (h1 x 1), b1, W2 (h2 x h1), b2, W3 (h3 x h2), b3,
// then the head W (out x h3) and head bias.
struct Hypernetwork {
  std::vector<std::size_t> hidden = {128, 32, 8};
  std::size_t n_eta = 0;

  std::size_t out_size() const { return 4 + n_eta; }

  std::size_t theta_size() const {
    std::size_t n = 0, prev = 1;
    for (std::size_t h : hidden) {
      n += (prev + 1) * h;
      prev = h;
    }
    return n + (prev + 1) * out_size();
  }

  struct Cache {
    double t;  // log gamma
    std::vector<std::vector<double>> z;  // pre-activations per hidden layer
    std::vector<std::vector<double>> a;  // activations per hidden layer
  };

  // out must hold out_size() values
  void forward(const std::vector<double>& theta, double gamma, double* out,
               Cache& cache) const {
    if (theta.size() != theta_size())
      throw DimMismatch("hypernet: theta has the wrong length");
    if (!(gamma > 0.0)) throw BadConfig("hypernet: gamma must be > 0");
    const double t = std::log(gamma);
    cache.t = t;
    cache.z.assign(hidden.size(), {});
    cache.a.assign(hidden.size(), {});

    std::size_t off = 0, prev = 1;
    const double* input = &cache.t;
    const std::vector<double>* prev_a = nullptr;
    for (std::size_t l = 0; l < hidden.size(); ++l) {
      const std::size_t h = hidden[l];
      cache.z[l].resize(h);
      cache.a[l].resize(h);
      const double* w = theta.data() + off;
      const double* b = w + h * prev;
      for (std::size_t i = 0; i < h; ++i) {
        double acc = b[i];
        for (std::size_t j = 0; j < prev; ++j)
          acc += w[i * prev + j] * (l == 0 ? input[j] : (*prev_a)[j]);
        cache.z[l][i] = acc;
        cache.a[l][i] = std::exp(-acc * acc);
      }
      off += (prev + 1) * h;
      prev = h;
      prev_a = &cache.a[l];
    }
    const double* w = theta.data() + off;
    const double* b = w + out_size() * prev;
    for (std::size_t i = 0; i < out_size(); ++i) {
      double acc = b[i];
      for (std::size_t j = 0; j < prev; ++j) acc += w[i * prev + j] * (*prev_a)[j];
      out[i] = acc;
    }
  }

  // accumulates d(loss)/d(theta) into dtheta given d(loss)/d(out)
  void backward(const std::vector<double>& theta, const Cache& cache,
                const double* dout, std::vector<double>& dtheta) const {
    const std::size_t depth = hidden.size();
    std::vector<std::size_t> offs(depth + 1);
    std::size_t off = 0, prev = 1;
    for (std::size_t l = 0; l < depth; ++l) {
      offs[l] = off;
      off += (prev + 1) * hidden[l];
      prev = hidden[l];
    }
    offs[depth] = off;

    // head
    const std::size_t last = hidden.back();
    std::vector<double> abar(last, 0.0);
    {
      const double* w = theta.data() + offs[depth];
      double* dw = dtheta.data() + offs[depth];
      double* db = dw + out_size() * last;
      const std::vector<double>& a = cache.a[depth - 1];
      for (std::size_t i = 0; i < out_size(); ++i) {
        db[i] += dout[i];
        for (std::size_t j = 0; j < last; ++j) {
          dw[i * last + j] += dout[i] * a[j];
          abar[j] += w[i * last + j] * dout[i];
        }
      }
    }
    // hidden layers, top down
    for (std::size_t l = depth; l-- > 0;) {
      const std::size_t h = hidden[l];
      const std::size_t pw = l == 0 ? 1 : hidden[l - 1];
      std::vector<double> zbar(h);
      for (std::size_t i = 0; i < h; ++i)
        zbar[i] = abar[i] * -2.0 * cache.z[l][i] * cache.a[l][i];
      const double* w = theta.data() + offs[l];
      double* dw = dtheta.data() + offs[l];
      double* db = dw + h * pw;
      std::vector<double> next_abar(pw, 0.0);
      for (std::size_t i = 0; i < h; ++i) {
        db[i] += zbar[i];
        for (std::size_t j = 0; j < pw; ++j) {
          const double in = l == 0 ? cache.t : cache.a[l - 1][j];
          dw[i * pw + j] += zbar[i] * in;
          next_abar[j] += w[i * pw + j] * zbar[i];
        }
      }
      abar = std::move(next_abar);
    }
  }

  // Head bias starts at a concrete activation initialization (and zero log
  // scales), so hnet(gamma) is near that configuration for every gamma.
  std::vector<double> init_theta(const ActivationModel& act_template, Rng& rng) const {
    if (act_template.param_count() != n_eta)
      throw BadConfig("hypernet: activation template does not match n_eta");
    if (hidden.empty()) throw BadConfig("hypernet: need at least one hidden layer");
    std::vector<double> theta(theta_size(), 0.0);
    std::size_t off = 0, prev = 1;
    for (std::size_t h : hidden) {
      const double scale = 1.0 / std::sqrt(static_cast<double>(prev));
      for (std::size_t i = 0; i < h * prev; ++i) theta[off + i] = scale * rng.normal();
      // spread the bump centers so units respond to different gamma
      for (std::size_t i = 0; i < h; ++i) theta[off + h * prev + i] = rng.uniform(-2.0, 2.0);
      off += (prev + 1) * h;
      prev = h;
    }
    const double head_scale = 0.1 / std::sqrt(static_cast<double>(prev));
    for (std::size_t i = 0; i < out_size() * prev; ++i)
      theta[off + i] = head_scale * rng.normal();
    ActivationModel init = act_template;
    init_activation_params(init, rng);
    double* head_bias = theta.data() + off + out_size() * prev;
    for (std::size_t i = 0; i < 4; ++i) head_bias[i] = 0.0;
    for (std::size_t i = 0; i < n_eta; ++i) head_bias[4 + i] = init.eta[i];
    return theta;
  }
};

}  // namespace gp2bnn

#endif  // GP2BNN_HYPERNET_HPP
