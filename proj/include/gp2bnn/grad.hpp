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

#ifndef GP2BNN_GRAD_HPP
#define GP2BNN_GRAD_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "gp2bnn/activations.hpp"
#include "gp2bnn/bnn.hpp"
#include "gp2bnn/errors.hpp"
#include "gp2bnn/gp.hpp"
#include "gp2bnn/hypernet.hpp"
#include "gp2bnn/linalg.hpp"
#include "gp2bnn/loss_metrics.hpp"
#include "gp2bnn/parallel.hpp"
#include "gp2bnn/rng.hpp"

namespace gp2bnn {

enum class ParamMode { Direct, Hypernet };

// Trainable parameters, flat.  Direct mode: the four log weight scales in
// the order [input bias, input weight, output bias, output weight] followed
// by the activation parameters.  Hypernet mode: the hypernetwork weights
// (scales and activation parameters are produced per gamma).
struct ParamVector {
  ParamMode mode = ParamMode::Direct;
  std::size_t n_eta = 0;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }

  static ParamVector direct(const ActivationModel& act) {
    ParamVector p;
    p.mode = ParamMode::Direct;
    p.n_eta = act.param_count();
    p.values.assign(4 + p.n_eta, 0.0);
    for (std::size_t i = 0; i < p.n_eta; ++i) p.values[4 + i] = act.eta[i];
    return p;
  }

  static ParamVector hypernet(std::vector<double> theta, std::size_t n_eta) {
    ParamVector p;
    p.mode = ParamMode::Hypernet;
    p.n_eta = n_eta;
    p.values = std::move(theta);
    return p;
  }
};

struct ModelShape {
  std::size_t width = 128;
  std::size_t input_dim = 1;
  ActivationModel act_template;  // eta content ignored, shape is what counts
};

// One training batch: evaluation inputs plus the (constant) target moments.
struct BatchSpec {
  explicit BatchSpec(std::size_t n) : target_cov(n), target_sqrt(n) {}

  InputSet xs;
  std::vector<double> target_mean;
  SymMatrix target_cov;
  SymMatrix target_sqrt;  // PSD square root of target_cov
  double target_var = 1.0;
  double target_skew = 0.0;
  double target_kurt = 3.0;
  double regularizer_weight = 0.0;
  std::size_t mc_samples = 1024;
  std::uint64_t noise_seed = 0;
  double gamma = 1.0;  // hypernet conditioning input
  int workers = 0;     // 0: use GP2BNN_THREADS / hardware default
};

// Target given by an exact GP: zero mean, gram covariance, Gaussian pooled
// moments computed from the gram diagonal.
inline BatchSpec make_gp_batch_spec(const KernelSpec& kernel, const InputSet& xs,
                                    std::size_t mc_samples, std::uint64_t noise_seed,
                                    double regularizer_weight = 0.0) {
  xs.validate();
  BatchSpec b(xs.size());
  b.xs = xs;
  b.target_mean.assign(xs.size(), 0.0);
  b.target_cov = gram(kernel, xs);
  b.target_sqrt = sqrtm_psd(b.target_cov);
  double m2 = 0.0, d2 = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double v = b.target_cov(i, i);
    m2 += v;
    d2 += v * v;
  }
  m2 /= static_cast<double>(xs.size());
  d2 /= static_cast<double>(xs.size());
  b.target_var = m2;
  b.target_skew = 0.0;
  b.target_kurt = 3.0 * d2 / (m2 * m2);  // Gaussian mixture across points
  b.regularizer_weight = regularizer_weight;
  b.mc_samples = mc_samples;
  b.noise_seed = noise_seed;
  return b;
}

// Target given by an empirical function batch (for example draws from a
// reference network prior): sample moments and pooled sample statistics.
inline BatchSpec make_target_batch_spec(const FunctionBatch& target, const InputSet& xs,
                                        std::size_t mc_samples, std::uint64_t noise_seed,
                                        double regularizer_weight = 0.0) {
  xs.validate();
  if (target.n_points() != xs.size())
    throw InputSetMismatch("batch spec: target batch does not match the input set");
  BatchSpec b(xs.size());
  b.xs = xs;
  MomentSummary m = moments(target);
  b.target_mean = std::move(m.mean);
  b.target_cov = m.covariance;
  b.target_sqrt = sqrtm_psd(b.target_cov);
  const detail::PooledMoments pooled = detail::pooled_moments(target);
  b.target_var = pooled.var;
  b.target_skew = pooled.skew;
  b.target_kurt = pooled.kurt;
  b.regularizer_weight = regularizer_weight;
  b.mc_samples = mc_samples;
  b.noise_seed = noise_seed;
  return b;
}

// Materializes the concrete prior described by a parameter vector (running
// the hypernetwork at gamma when conditional).
inline PriorParams resolve_prior(const ParamVector& p, const ModelShape& shape,
                                 const Hypernetwork* hnet = nullptr, double gamma = 1.0) {
  PriorParams prior;
  prior.width = shape.width;
  prior.input_dim = shape.input_dim;
  prior.activation = shape.act_template;
  prior.activation.eta.assign(p.n_eta, 0.0);
  double logsig[4];
  if (p.mode == ParamMode::Direct) {
    if (p.values.size() != 4 + p.n_eta)
      throw DimMismatch("params: direct vector has the wrong length");
    for (int i = 0; i < 4; ++i) logsig[i] = p.values[i];
    for (std::size_t i = 0; i < p.n_eta; ++i) prior.activation.eta[i] = p.values[4 + i];
  } else {
    if (hnet == nullptr) throw BadConfig("params: hypernet mode needs a hypernetwork");
    std::vector<double> out(hnet->out_size());
    Hypernetwork::Cache cache;
    hnet->forward(p.values, gamma, out.data(), cache);
    for (int i = 0; i < 4; ++i) logsig[i] = out[i];
    for (std::size_t i = 0; i < p.n_eta; ++i) prior.activation.eta[i] = out[4 + i];
  }
  prior.sigma_b0 = std::exp(logsig[0]);
  prior.sigma_w0 = std::exp(logsig[1]);
  prior.sigma_bl = std::exp(logsig[2]);
  prior.sigma_wl = std::exp(logsig[3]);
  return prior;
}

struct LossResult {
  double loss;
  double w2_part;
  double reg_part;
  ParamVector grad;
};

namespace detail {
constexpr std::size_t kSampleChunk = 8;
constexpr double kEigFloorRel = 1e-8;
}  // namespace detail

// Monte Carlo 2-Wasserstein loss between the network prior and the batch
// target, with the exact gradient of the whole pipeline.  Reparameterized
// draws come from per-sample streams off batch.noise_seed, so two calls with
// equal arguments agree bitwise; the backward pass replays the same streams.
inline LossResult loss_and_grad(const ParamVector& p, const ModelShape& shape,
                                const BatchSpec& batch,
                                const Hypernetwork* hnet = nullptr) {
  const std::size_t n = batch.xs.size();
  const std::size_t nf = batch.mc_samples;
  const std::size_t height = shape.width;
  if (nf < 2) throw TooFewSamples("loss_and_grad: need at least 2 MC samples");
  if (batch.xs.dim() != shape.input_dim)
    throw DimMismatch("loss_and_grad: input set dim differs from the model");
  if (batch.target_mean.size() != n || batch.target_cov.dim() != n ||
      batch.target_sqrt.dim() != n)
    throw DimMismatch("loss_and_grad: target moments do not match the input set");

  // resolve sigmas and activation parameters
  double logsig[4];
  Hypernetwork::Cache hcache;
  PriorParams prior;
  prior.width = height;
  prior.input_dim = shape.input_dim;
  prior.activation = shape.act_template;
  prior.activation.eta.assign(p.n_eta, 0.0);
  if (p.mode == ParamMode::Direct) {
    if (p.values.size() != 4 + p.n_eta)
      throw DimMismatch("loss_and_grad: direct parameter vector has wrong length");
    for (int i = 0; i < 4; ++i) logsig[i] = p.values[i];
    for (std::size_t i = 0; i < p.n_eta; ++i)
      prior.activation.eta[i] = p.values[4 + i];
  } else {
    if (hnet == nullptr)
      throw BadConfig("loss_and_grad: hypernet mode needs a hypernetwork");
    if (hnet->n_eta != p.n_eta || hnet->theta_size() != p.values.size())
      throw DimMismatch("loss_and_grad: hypernetwork does not match the parameters");
    std::vector<double> out(hnet->out_size());
    hnet->forward(p.values, batch.gamma, out.data(), hcache);
    for (int i = 0; i < 4; ++i) logsig[i] = out[i];
    for (std::size_t i = 0; i < p.n_eta; ++i) prior.activation.eta[i] = out[4 + i];
  }
  prior.sigma_b0 = std::exp(logsig[0]);
  prior.sigma_w0 = std::exp(logsig[1]);
  prior.sigma_bl = std::exp(logsig[2]);
  prior.sigma_wl = std::exp(logsig[3]);
  for (double s : {prior.sigma_b0, prior.sigma_w0, prior.sigma_bl, prior.sigma_wl})
    if (!std::isfinite(s) || !(s > 0.0))
      throw NonFiniteLoss("loss_and_grad: weight scale overflow");
  prior.activation.validate();

  // pass 1: draw the function matrix
  Matrix f(nf, n);
  parallel_chunks_n(nf, detail::kSampleChunk, batch.workers,
                    [&](std::size_t, std::size_t s0, std::size_t s1) {
                      for (std::size_t s = s0; s < s1; ++s)
                        sample_one_function(prior, batch.xs.points, batch.noise_seed, s,
                                            f.row(s));
                    });
  for (double v : f.data())
    if (!std::isfinite(v)) throw NonFiniteLoss("loss_and_grad: non-finite sample value");

  // moments; f is centered in place afterwards
  std::vector<double> mu(n, 0.0);
  for (std::size_t s = 0; s < nf; ++s) {
    const double* row = f.row(s);
    for (std::size_t i = 0; i < n; ++i) mu[i] += row[i];
  }
  for (auto& m : mu) m /= static_cast<double>(nf);
  for (std::size_t s = 0; s < nf; ++s) {
    double* row = f.row(s);
    for (std::size_t i = 0; i < n; ++i) row[i] -= mu[i];
  }
  Matrix sigma1(n, n);
  for (std::size_t s = 0; s < nf; ++s) {
    const double* row = f.row(s);
    for (std::size_t i = 0; i < n; ++i) {
      const double ci = row[i];
      double* srow = sigma1.row(i);
      for (std::size_t j = 0; j <= i; ++j) srow[j] += ci * row[j];
    }
  }
  const double inv_nm1 = 1.0 / static_cast<double>(nf - 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      sigma1(i, j) *= inv_nm1;
      sigma1(j, i) = sigma1(i, j);
    }
  for (double v : sigma1.data())
    if (!std::isfinite(v)) throw NonFiniteLoss("loss_and_grad: non-finite covariance");

  // closed-form W2^2 against the target, eigendecomposition route
  const Matrix& r2 = batch.target_sqrt.mat();
  const Matrix m_inner = matmul(matmul(r2, sigma1), r2);
  const EigResult eig = sym_eig(SymMatrix(m_inner));
  double trace_term = 0.0;
  double lam_max = 0.0;
  for (double lam : eig.values) {
    trace_term += std::sqrt(std::max(lam, 0.0));
    lam_max = std::max(lam_max, lam);
  }
  double mu_term = 0.0;
  std::vector<double> dmu(n);
  for (std::size_t i = 0; i < n; ++i) {
    dmu[i] = mu[i] - batch.target_mean[i];
    mu_term += dmu[i] * dmu[i];
  }
  double tr1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) tr1 += sigma1(i, i);
  const double w2_raw = mu_term + tr1 + batch.target_cov.trace() - 2.0 * trace_term;
  const double inv_n = 1.0 / static_cast<double>(n);
  const double w2_part = w2_raw * inv_n;

  // d(loss)/d(Sigma1) = (I - R M^{-1/2} R) / n.  Eigenvalues of M below
  // 1e-8 of the largest are floored: that far down the MC covariance is
  // sampling noise, and 1/sqrt(lambda) would amplify it without bound.  In
  // that regime the returned gradient is the exact gradient of the
  // spectrally clipped objective rather than of the raw one.
  Matrix sigma_bar(n, n);
  {
    const double floor = detail::kEigFloorRel * std::max(lam_max, 1e-300);
    Matrix paux(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k)
          acc += eig.vectors(i, k) * eig.vectors(j, k) /
                 std::sqrt(std::max(eig.values[k], floor));
        paux(i, j) = acc;
        paux(j, i) = acc;
      }
    const Matrix b = matmul(matmul(r2, paux), r2);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        const double v = ((i == j ? 1.0 : 0.0) - 0.5 * (b(i, j) + b(j, i))) * inv_n;
        sigma_bar(i, j) = v;
        sigma_bar(j, i) = v;
      }
  }

  // optional pooled-moment regularizer on the raw values
  double reg_part = 0.0;
  double g2 = 0.0, g3 = 0.0, g4 = 0.0, pm1 = 0.0, pm2 = 0.0, pm3 = 0.0;
  const bool use_reg = batch.regularizer_weight != 0.0;
  if (use_reg) {
    const double total = static_cast<double>(nf * n);
    double m1 = 0.0;
    for (std::size_t s = 0; s < nf; ++s) {
      const double* row = f.row(s);
      for (std::size_t i = 0; i < n; ++i) m1 += row[i] + mu[i];
    }
    m1 /= total;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (std::size_t s = 0; s < nf; ++s) {
      const double* row = f.row(s);
      for (std::size_t i = 0; i < n; ++i) {
        const double d = row[i] + mu[i] - m1;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
      }
    }
    m2 /= total;
    m3 /= total;
    m4 /= total;
    if (!(m2 > 0.0)) throw DegenerateBatch("loss_and_grad: pooled variance is zero");
    const double skew = m3 / std::pow(m2, 1.5);
    const double kurt = m4 / (m2 * m2);
    const double dvar = m2 - batch.target_var;
    const double dskew = skew - batch.target_skew;
    const double dkurt = kurt - batch.target_kurt;
    reg_part = dvar * dvar + dskew * dskew + dkurt * dkurt;
    // d(reg)/d(m2..m4)
    g2 = 2.0 * dvar + 2.0 * dskew * (-1.5 * m3 * std::pow(m2, -2.5)) +
         2.0 * dkurt * (-2.0 * m4 / (m2 * m2 * m2));
    g3 = 2.0 * dskew * std::pow(m2, -1.5);
    g4 = 2.0 * dkurt / (m2 * m2);
    const double w = batch.regularizer_weight;
    g2 *= w;
    g3 *= w;
    g4 *= w;
    pm1 = m1;
    pm2 = m2;
    pm3 = m3;
  }

  const double loss = w2_part + batch.regularizer_weight * reg_part;

  // d(loss)/d(f): mean path, covariance path, regularizer path
  Matrix fbar(nf, n);
  {
    const double mean_coef = 2.0 * inv_n / static_cast<double>(nf);
    const double cov_coef = 2.0 * inv_nm1;
    const double inv_total = use_reg ? 1.0 / static_cast<double>(nf * n) : 0.0;
    for (std::size_t s = 0; s < nf; ++s) {
      const double* crow = f.row(s);
      double* out = fbar.row(s);
      for (std::size_t i = 0; i < n; ++i) {
        double acc = mean_coef * dmu[i];
        const double* sbrow = sigma_bar.row(i);
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += crow[j] * sbrow[j];
        acc += cov_coef * dot;
        if (use_reg) {
          const double d = crow[i] + mu[i] - pm1;
          acc += (g2 * 2.0 * d + g3 * (3.0 * d * d - 3.0 * pm2) +
                  g4 * (4.0 * d * d * d - 4.0 * pm3)) *
                 inv_total;
        }
        out[i] = acc;
      }
    }
  }

  // pass 2: replay the draws, accumulate parameter gradients per chunk
  const std::size_t dim = shape.input_dim;
  const std::size_t n_eta = p.n_eta;
  const std::size_t gsize = 4 + n_eta;  // sigma-space grads then eta grads
  const std::size_t n_chunks = chunk_count(nf, detail::kSampleChunk);
  std::vector<std::vector<double>> chunk_grads(n_chunks);
  const double inv_sqrt_h = 1.0 / std::sqrt(static_cast<double>(height));
  const double out_scale = prior.sigma_wl * inv_sqrt_h;

  parallel_chunks_n(
      nf, detail::kSampleChunk, batch.workers,
      [&](std::size_t c, std::size_t s0, std::size_t s1) {
        std::vector<double>& g = chunk_grads[c];
        g.assign(gsize, 0.0);
        std::vector<double> w0(dim), deta(n_eta);
        for (std::size_t s = s0; s < s1; ++s) {
          UnitDraws draws(batch.noise_seed, s);
          const double* fb = fbar.row(s);
          double fb_sum = 0.0;
          for (std::size_t i = 0; i < n; ++i) fb_sum += fb[i];
          for (std::size_t j = 0; j < height; ++j) {
            double b0, wl;
            draws.unit(w0.data(), dim, b0, wl);
            const double bias = prior.sigma_b0 * b0;
            const double coef_h = out_scale * wl;
            const double coef_wl = inv_sqrt_h * wl;
            for (std::size_t i = 0; i < n; ++i) {
              // same accumulation order as sample_one_function, so phi sees
              // bitwise the pre-activations of pass 1
              const double* x = batch.xs.points.row(i);
              double u = bias, dot = 0.0;
              for (std::size_t d = 0; d < dim; ++d) {
                u += prior.sigma_w0 * w0[d] * x[d];
                dot += w0[d] * x[d];
              }
              double dphi;
              const double h = act_eval_full(prior.activation, u, dphi,
                                             n_eta > 0 ? deta.data() : nullptr);
              const double hbar = fb[i] * coef_h;
              const double ubar = hbar * dphi;
              g[3] += fb[i] * coef_wl * h;  // sigma_wl
              g[1] += ubar * dot;           // sigma_w0
              g[0] += ubar * b0;            // sigma_b0
              for (std::size_t k = 0; k < n_eta; ++k) g[4 + k] += hbar * deta[k];
            }
          }
          const double bl = draws.bl();
          g[2] += fb_sum * bl;  // sigma_bl
        }
      });

  std::vector<double> total(gsize, 0.0);
  for (const auto& g : chunk_grads)
    for (std::size_t i = 0; i < gsize; ++i) total[i] += g[i];

  // chain rule into log space
  total[0] *= prior.sigma_b0;
  total[1] *= prior.sigma_w0;
  total[2] *= prior.sigma_bl;
  total[3] *= prior.sigma_wl;

  LossResult result;
  result.loss = loss;
  result.w2_part = w2_part;
  result.reg_part = reg_part;
  result.grad.mode = p.mode;
  result.grad.n_eta = p.n_eta;
  if (p.mode == ParamMode::Direct) {
    result.grad.values = std::move(total);
  } else {
    result.grad.values.assign(p.values.size(), 0.0);
    hnet->backward(p.values, hcache, total.data(), result.grad.values);
  }
  if (!std::isfinite(result.loss)) throw NonFiniteLoss("loss_and_grad: non-finite loss");
  for (double v : result.grad.values)
    if (!std::isfinite(v)) throw NonFiniteLoss("loss_and_grad: non-finite gradient");
  return result;
}

}  // namespace gp2bnn

#endif  // GP2BNN_GRAD_HPP
