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

#ifndef GP2BNN_BNN_HPP
#define GP2BNN_BNN_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "gp2bnn/activations.hpp"
#include "gp2bnn/errors.hpp"
#include "gp2bnn/gp.hpp"
#include "gp2bnn/linalg.hpp"
#include "gp2bnn/rng.hpp"

namespace gp2bnn {

// Single-hidden-layer network prior.  Hidden unit j computes
// u_j(x) = sigma_w0 sum_d e_jd x_d + sigma_b0 e_j, and the output is
// f(x) = sigma_wl / sqrt(H) sum_j e_j phi(u_j(x)) + sigma_bl e, with all
// e independent standard normals.
struct PriorParams {
  std::size_t width = 128;
  std::size_t input_dim = 1;
  double sigma_b0 = 1.0;
  double sigma_w0 = 1.0;
  double sigma_bl = 1.0;
  double sigma_wl = 1.0;
  ActivationModel activation;

  void validate() const {
    if (width < 1) throw DimMismatch("prior: width must be >= 1");
    if (input_dim < 1) throw DimMismatch("prior: input_dim must be >= 1");
    if (!(sigma_b0 > 0.0) || !(sigma_w0 > 0.0) || !(sigma_bl > 0.0) || !(sigma_wl > 0.0))
      throw BadConfig("prior: weight scales must be > 0");
    activation.validate();
  }
};

// Fixed per-sample draw order: for each hidden unit, first the input weights,
// then the input bias, then the output weight; the output bias comes last.
// Both the sampler and the gradient replay consume draws through this class,
// which is what makes the two passes see identical weights.
class UnitDraws {
 public:
  UnitDraws(std::uint64_t seed, std::uint64_t sample_index)
      : rng_(derive_seed(seed, 0x626e6e5f73ULL, sample_index)) {}

  void unit(double* w0, std::size_t input_dim, double& b0, double& wl) {
    for (std::size_t d = 0; d < input_dim; ++d) w0[d] = rng_.normal();
    b0 = rng_.normal();
    wl = rng_.normal();
  }

  double bl() { return rng_.normal(); }

 private:
  Rng rng_;
};

// Evaluates one weight draw of the prior on every point, adding into f_out.
// f_out must hold n_points zeros (or be accumulated deliberately).
inline void sample_one_function(const PriorParams& prior, const Matrix& pts,
                                std::uint64_t seed, std::uint64_t sample_index,
                                double* f_out) {
  const std::size_t n = pts.rows();
  const std::size_t dim = pts.cols();
  const double out_scale = prior.sigma_wl / std::sqrt(static_cast<double>(prior.width));
  UnitDraws draws(seed, sample_index);
  std::vector<double> w0(dim);
  for (std::size_t i = 0; i < n; ++i) f_out[i] = 0.0;
  for (std::size_t j = 0; j < prior.width; ++j) {
    double b0, wl;
    draws.unit(w0.data(), dim, b0, wl);
    const double bias = prior.sigma_b0 * b0;
    const double coef = out_scale * wl;
    for (std::size_t i = 0; i < n; ++i) {
      const double* x = pts.row(i);
      double u = bias;
      for (std::size_t d = 0; d < dim; ++d) u += prior.sigma_w0 * w0[d] * x[d];
      f_out[i] += coef * act_eval(prior.activation, u);
    }
  }
  const double bl = draws.bl();
  for (std::size_t i = 0; i < n; ++i) f_out[i] += prior.sigma_bl * bl;
}

inline FunctionBatch sample_functions(const PriorParams& prior, const InputSet& xs,
                                      std::size_t n_functions, std::uint64_t seed) {
  prior.validate();
  xs.validate();
  if (xs.dim() != prior.input_dim)
    throw DimMismatch("sample_functions: input set dim differs from prior input_dim");
  FunctionBatch batch;
  batch.source = "bnn";
  batch.values = Matrix(n_functions, xs.size());
  for (std::size_t s = 0; s < n_functions; ++s)
    sample_one_function(prior, xs.points, seed, s, batch.values.row(s));
  return batch;
}

struct CovEstimate {
  double estimate;
  double std_error;
};

// Monte Carlo covariance of (f(x), f(x2)) over n weight draws, with the
// asymptotic standard error sqrt((m22 - c^2) / n).
inline CovEstimate mc_covariance(const PriorParams& prior, const std::vector<double>& x,
                                 const std::vector<double>& x2, std::size_t n,
                                 std::uint64_t seed) {
  prior.validate();
  if (n < 2) throw TooFewSamples("mc_covariance: need at least 2 draws");
  if (x.size() != prior.input_dim || x2.size() != prior.input_dim)
    throw DimMismatch("mc_covariance: point dim differs from prior input_dim");

  Matrix pts(2, x.size());
  for (std::size_t d = 0; d < x.size(); ++d) {
    pts(0, d) = x[d];
    pts(1, d) = x2[d];
  }
  std::vector<double> a(n), b(n);
  double f[2];
  for (std::size_t s = 0; s < n; ++s) {
    sample_one_function(prior, pts, seed, s, f);
    a[s] = f[0];
    b[s] = f[1];
  }
  double ma = 0.0, mb = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    ma += a[s];
    mb += b[s];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double c = 0.0, m22 = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const double da = a[s] - ma;
    const double db = b[s] - mb;
    c += da * db;
    m22 += da * da * db * db;
  }
  const double est = c / static_cast<double>(n - 1);
  const double cbar = c / static_cast<double>(n);
  m22 /= static_cast<double>(n);
  const double var = std::max(m22 - cbar * cbar, 0.0);
  return {est, std::sqrt(var / static_cast<double>(n))};
}

}  // namespace gp2bnn

#endif  // GP2BNN_BNN_HPP
