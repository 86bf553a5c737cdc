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

#ifndef GP2BNN_POSTERIOR_HPP
#define GP2BNN_POSTERIOR_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gp2bnn/bnn.hpp"
#include "gp2bnn/dataset.hpp"
#include "gp2bnn/errors.hpp"
#include "gp2bnn/linalg.hpp"
#include "gp2bnn/rng.hpp"

namespace gp2bnn {

enum class Likelihood { Gaussian, BernoulliLogit };

inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// The posterior is over the raw standard-normal weights of the network, in a
// flat vector laid out as [w0 (H x I, row per unit), b0 (H), wl (H), bl].
// The prior scales stay folded into the forward map, so the prior term on the
// raw weights is always a standard normal.
struct PosteriorModel {
  PriorParams prior;
  Likelihood likelihood = Likelihood::Gaussian;
  double noise_var = 0.1;

  std::size_t dim() const {
    return prior.width * (prior.input_dim + 2) + 1;
  }

  void validate() const {
    prior.validate();
    if (likelihood == Likelihood::Gaussian && !(noise_var > 0.0))
      throw BadConfig("posterior: noise_var must be > 0");
  }

  void check_data(const Dataset& data) const {
    data.validate();
    if (data.dim() != prior.input_dim)
      throw DimMismatch("posterior: data dim differs from prior input_dim");
    if (likelihood == Likelihood::BernoulliLogit)
      for (double v : data.y)
        if (v != 0.0 && v != 1.0)
          throw BadData("posterior: bernoulli targets must be 0 or 1");
  }

  // Network output for one weight vector on every row of pts.
  void predict_f(const std::vector<double>& z, const Matrix& pts, double* f_out) const {
    if (z.size() != dim()) throw DimMismatch("posterior: weight vector has wrong length");
    if (pts.cols() != prior.input_dim)
      throw DimMismatch("posterior: point dim differs from prior input_dim");
    const std::size_t H = prior.width;
    const std::size_t I = prior.input_dim;
    const std::size_t b0_off = H * I;
    const std::size_t wl_off = H * I + H;
    const std::size_t bl_off = H * (I + 2);
    const double out_scale = prior.sigma_wl / std::sqrt(static_cast<double>(H));
    for (std::size_t i = 0; i < pts.rows(); ++i) {
      const double* x = pts.row(i);
      double f = prior.sigma_bl * z[bl_off];
      for (std::size_t j = 0; j < H; ++j) {
        double u = prior.sigma_b0 * z[b0_off + j];
        for (std::size_t d = 0; d < I; ++d) u += prior.sigma_w0 * z[j * I + d] * x[d];
        f += out_scale * z[wl_off + j] * act_eval(prior.activation, u);
      }
      f_out[i] = f;
    }
  }

  // Unnormalized log posterior density and its gradient with respect to the
  // raw weights.  grad is overwritten.
  double logp_grad(const std::vector<double>& z, const Dataset& data,
                   std::vector<double>& grad) const {
    const std::size_t n = dim();
    if (z.size() != n) throw DimMismatch("posterior: weight vector has wrong length");
    grad.assign(n, 0.0);

    double lp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      lp -= 0.5 * z[i] * z[i];
      grad[i] = -z[i];
    }

    const std::size_t H = prior.width;
    const std::size_t I = prior.input_dim;
    const std::size_t b0_off = H * I;
    const std::size_t wl_off = H * I + H;
    const std::size_t bl_off = H * (I + 2);
    const double out_scale = prior.sigma_wl / std::sqrt(static_cast<double>(H));

    std::vector<double> phi(H), dphi(H);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double* x = data.x.row(i);
      double f = prior.sigma_bl * z[bl_off];
      for (std::size_t j = 0; j < H; ++j) {
        double u = prior.sigma_b0 * z[b0_off + j];
        for (std::size_t d = 0; d < I; ++d) u += prior.sigma_w0 * z[j * I + d] * x[d];
        const ActEval e = act_eval_dx(prior.activation, u);
        phi[j] = e.value;
        dphi[j] = e.dx;
        f += out_scale * z[wl_off + j] * e.value;
      }

      double fbar;
      if (likelihood == Likelihood::Gaussian) {
        const double r = data.y[i] - f;
        lp -= 0.5 * r * r / noise_var;
        fbar = r / noise_var;
      } else {
        // y*f - log(1 + exp(f)), evaluated without overflow
        const double sp = f > 0.0 ? f + std::log1p(std::exp(-f)) : std::log1p(std::exp(f));
        lp += data.y[i] * f - sp;
        fbar = data.y[i] - sigmoid(f);
      }

      grad[bl_off] += fbar * prior.sigma_bl;
      for (std::size_t j = 0; j < H; ++j) {
        grad[wl_off + j] += fbar * out_scale * phi[j];
        const double hbar = fbar * out_scale * z[wl_off + j] * dphi[j];
        grad[b0_off + j] += hbar * prior.sigma_b0;
        for (std::size_t d = 0; d < I; ++d)
          grad[j * I + d] += hbar * prior.sigma_w0 * x[d];
      }
    }
    return lp;
  }
};

struct HmcConfig {
  std::size_t n_chains = 4;
  std::size_t n_warmup = 500;
  std::size_t n_samples = 1000;
  std::size_t n_leapfrog = 32;
  double target_accept = 0.8;
  double init_step = 0.0;  // 0 picks a starting step size automatically
  bool adapt = true;
  double divergence_delta = 1000.0;
  double max_divergent_frac = 0.05;
  std::uint64_t seed = 1;

  void validate() const {
    if (n_chains < 1) throw BadConfig("hmc: n_chains must be >= 1");
    if (n_samples < 1) throw BadConfig("hmc: n_samples must be >= 1");
    if (n_leapfrog < 1) throw BadConfig("hmc: n_leapfrog must be >= 1");
    if (!(target_accept > 0.0) || !(target_accept < 1.0))
      throw BadConfig("hmc: target_accept must be in (0, 1)");
    if (!(init_step >= 0.0)) throw BadConfig("hmc: init_step must be >= 0");
    if (!(divergence_delta > 0.0)) throw BadConfig("hmc: divergence_delta must be > 0");
    if (!(max_divergent_frac >= 0.0))
      throw BadConfig("hmc: max_divergent_frac must be >= 0");
  }
};

struct HmcChain {
  Matrix draws;  // n_samples x dim
  double accept_rate = 0.0;
  std::size_t divergences = 0;
  double step_size = 0.0;
};

struct HmcResult {
  std::vector<HmcChain> chains;
  double accept_rate = 0.0;
  std::size_t divergence_count = 0;

  std::size_t total_draws() const {
    std::size_t t = 0;
    for (const auto& c : chains) t += c.draws.rows();
    return t;
  }
};

namespace detail {

// One leapfrog trajectory with unit mass matrix.  Updates z, p, grad, and
// logp in place; returns false as soon as anything goes non-finite.
template <class Target>
bool leapfrog(const Target& target, std::vector<double>& z, std::vector<double>& p,
              std::vector<double>& grad, double& logp, double eps,
              std::size_t n_steps) {
  const std::size_t n = z.size();
  for (std::size_t s = 0; s < n_steps; ++s) {
    for (std::size_t i = 0; i < n; ++i) p[i] += 0.5 * eps * grad[i];
    for (std::size_t i = 0; i < n; ++i) z[i] += eps * p[i];
    logp = target(z, grad);
    if (!std::isfinite(logp)) return false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(grad[i])) return false;
      p[i] += 0.5 * eps * grad[i];
    }
  }
  for (double v : p)
    if (!std::isfinite(v)) return false;
  return true;
}

inline double kinetic(const std::vector<double>& p) {
  double k = 0.0;
  for (double v : p) k += v * v;
  return 0.5 * k;
}

struct HmcStepResult {
  bool accepted = false;
  bool divergent = false;
  double alpha = 0.0;  // Metropolis acceptance probability
};

template <class Target>
HmcStepResult hmc_step(const Target& target, std::vector<double>& z, double& logp,
                       std::vector<double>& grad, double eps, std::size_t n_leapfrog,
                       double divergence_delta, Rng& rng, std::vector<double>& p,
                       std::vector<double>& z_new, std::vector<double>& g_new) {
  const std::size_t n = z.size();
  for (std::size_t i = 0; i < n; ++i) p[i] = rng.normal();
  const double h0 = -logp + kinetic(p);

  z_new = z;
  g_new = grad;
  double logp_new = logp;
  HmcStepResult res;
  if (!leapfrog(target, z_new, p, g_new, logp_new, eps, n_leapfrog)) {
    res.divergent = true;
    return res;
  }
  const double h1 = -logp_new + kinetic(p);
  const double dh = h1 - h0;
  if (!std::isfinite(dh) || dh > divergence_delta) {
    res.divergent = true;
    return res;
  }
  res.alpha = dh < 0.0 ? 1.0 : std::exp(-dh);
  if (rng.uniform() < res.alpha) {
    z.swap(z_new);
    grad.swap(g_new);
    logp = logp_new;
    res.accepted = true;
  }
  return res;
}

// Doubles or halves the step size until a single leapfrog step crosses 50%
// acceptance, starting from eps = 1.
template <class Target>
double find_initial_step(const Target& target, const std::vector<double>& z,
                         double logp, const std::vector<double>& grad, Rng& rng) {
  const std::size_t n = z.size();
  std::vector<double> p(n), zt(n), gt(n);
  auto step_alpha = [&](double eps) {
    for (std::size_t i = 0; i < n; ++i) p[i] = rng.normal();
    const double h0 = -logp + kinetic(p);
    zt = z;
    gt = grad;
    double lp = logp;
    if (!leapfrog(target, zt, p, gt, lp, eps, 1)) return 0.0;
    const double dh = -lp + kinetic(p) - h0;
    if (!std::isfinite(dh)) return 0.0;
    return dh < 0.0 ? 1.0 : std::exp(-dh);
  };

  double eps = 1.0;
  double alpha = step_alpha(eps);
  const int dir = alpha > 0.5 ? 1 : -1;
  for (int iter = 0; iter < 60; ++iter) {
    if (dir == 1 && alpha <= 0.5) break;
    if (dir == -1 && alpha >= 0.5) break;
    eps = dir == 1 ? eps * 2.0 : eps * 0.5;
    if (eps > 1e7 || eps < 1e-10) break;
    alpha = step_alpha(eps);
  }
  return eps;
}

}  // namespace detail

// Runs HMC chains against an arbitrary log density.  Target is a callable
// double(const std::vector<double>& z, std::vector<double>& grad) returning
// the log density and overwriting grad.  Step sizes adapt per chain during
// warmup by dual averaging toward the target acceptance rate.
template <class Target>
HmcResult hmc_run(const Target& target, std::size_t dim, const HmcConfig& cfg) {
  cfg.validate();
  if (dim < 1) throw BadConfig("hmc: dimension must be >= 1");

  HmcResult result;
  result.chains.resize(cfg.n_chains);
  std::size_t accepted_total = 0;

  for (std::size_t c = 0; c < cfg.n_chains; ++c) {
    Rng rng(derive_seed(cfg.seed, 0x686d63ULL, c));
    std::vector<double> z(dim), grad(dim), p(dim), z_new(dim), g_new(dim);
    for (std::size_t i = 0; i < dim; ++i) z[i] = rng.normal();
    double logp = target(z, grad);
    if (!std::isfinite(logp))
      throw NonFinite("hmc: log density non-finite at the initial point");

    double eps = cfg.init_step > 0.0
                     ? cfg.init_step
                     : detail::find_initial_step(target, z, logp, grad, rng);

    if (cfg.adapt && cfg.n_warmup > 0) {
      // dual averaging (t0 = 10, gamma = 0.05, kappa = 0.75)
      const double mu = std::log(10.0 * eps);
      const double t0 = 10.0, gamma = 0.05, kappa = 0.75;
      double hbar = 0.0, log_eps_bar = 0.0;
      for (std::size_t m = 1; m <= cfg.n_warmup; ++m) {
        const auto res = detail::hmc_step(target, z, logp, grad, eps, cfg.n_leapfrog,
                                          cfg.divergence_delta, rng, p, z_new, g_new);
        const double frac = 1.0 / (static_cast<double>(m) + t0);
        hbar = (1.0 - frac) * hbar + frac * (cfg.target_accept - res.alpha);
        const double log_eps =
            mu - std::sqrt(static_cast<double>(m)) / gamma * hbar;
        const double eta = std::pow(static_cast<double>(m), -kappa);
        log_eps_bar = eta * log_eps + (1.0 - eta) * log_eps_bar;
        eps = std::exp(log_eps);
      }
      eps = std::exp(log_eps_bar);
    } else {
      for (std::size_t m = 0; m < cfg.n_warmup; ++m)
        detail::hmc_step(target, z, logp, grad, eps, cfg.n_leapfrog,
                         cfg.divergence_delta, rng, p, z_new, g_new);
    }

    HmcChain& chain = result.chains[c];
    chain.step_size = eps;
    chain.draws = Matrix(cfg.n_samples, dim);
    std::size_t accepted = 0;
    for (std::size_t s = 0; s < cfg.n_samples; ++s) {
      const auto res = detail::hmc_step(target, z, logp, grad, eps, cfg.n_leapfrog,
                                        cfg.divergence_delta, rng, p, z_new, g_new);
      if (res.accepted) ++accepted;
      if (res.divergent) ++chain.divergences;
      double* row = chain.draws.row(s);
      for (std::size_t i = 0; i < dim; ++i) row[i] = z[i];
    }
    chain.accept_rate =
        static_cast<double>(accepted) / static_cast<double>(cfg.n_samples);
    accepted_total += accepted;
    result.divergence_count += chain.divergences;
  }

  const std::size_t total = cfg.n_chains * cfg.n_samples;
  result.accept_rate =
      static_cast<double>(accepted_total) / static_cast<double>(total);
  if (static_cast<double>(result.divergence_count) >
      cfg.max_divergent_frac * static_cast<double>(total))
    throw Diverged("hmc: " + std::to_string(result.divergence_count) + " of " +
                   std::to_string(total) + " draws diverged");
  return result;
}

inline HmcResult hmc_run(const PosteriorModel& model, const Dataset& data,
                         const HmcConfig& cfg) {
  model.validate();
  model.check_data(data);
  const auto target = [&](const std::vector<double>& z, std::vector<double>& g) {
    return model.logp_grad(z, data, g);
  };
  return hmc_run(target, model.dim(), cfg);
}

// Network outputs for every stored draw: row s holds f(x_test) under draw s,
// chains concatenated in order.
inline Matrix posterior_functions(const PosteriorModel& model, const HmcResult& res,
                                  const Matrix& x_test) {
  const std::size_t total = res.total_draws();
  if (total == 0) throw BadConfig("posterior_functions: no draws");
  Matrix f(total, x_test.rows());
  std::vector<double> z(model.dim());
  std::size_t row = 0;
  for (const auto& chain : res.chains) {
    if (chain.draws.cols() != model.dim())
      throw DimMismatch("posterior_functions: draw dim differs from model dim");
    for (std::size_t s = 0; s < chain.draws.rows(); ++s, ++row) {
      const double* src = chain.draws.row(s);
      std::copy(src, src + z.size(), z.begin());
      model.predict_f(z, x_test, f.row(row));
    }
  }
  return f;
}

struct PredictiveSummary {
  std::vector<double> mean;
  std::vector<double> epistemic_var;  // variance of f across draws
  std::vector<double> total_var;      // epistemic + observation noise
};

inline PredictiveSummary predictive_regression(const PosteriorModel& model,
                                               const Matrix& fdraws) {
  const std::size_t S = fdraws.rows();
  const std::size_t n = fdraws.cols();
  if (S < 2) throw TooFewSamples("predictive: need at least 2 draws");
  PredictiveSummary out;
  out.mean.assign(n, 0.0);
  out.epistemic_var.assign(n, 0.0);
  out.total_var.assign(n, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    const double* row = fdraws.row(s);
    for (std::size_t i = 0; i < n; ++i) out.mean[i] += row[i];
  }
  for (std::size_t i = 0; i < n; ++i) out.mean[i] /= static_cast<double>(S);
  for (std::size_t s = 0; s < S; ++s) {
    const double* row = fdraws.row(s);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = row[i] - out.mean[i];
      out.epistemic_var[i] += d * d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.epistemic_var[i] /= static_cast<double>(S);
    out.total_var[i] = out.epistemic_var[i] + model.noise_var;
  }
  return out;
}

// Average negative log predictive density of the equal-weight Gaussian
// mixture over draws.
inline double regression_nll(const PosteriorModel& model, const Matrix& fdraws,
                             const std::vector<double>& y) {
  const std::size_t S = fdraws.rows();
  const std::size_t n = fdraws.cols();
  if (y.size() != n) throw DimMismatch("regression_nll: y size differs from draws");
  if (S < 1) throw TooFewSamples("regression_nll: no draws");
  const double v = model.noise_var;
  const double log_norm = -0.5 * std::log(2.0 * 3.14159265358979323846 * v);
  double nll = 0.0;
  std::vector<double> logs(S);
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -1e308;
    for (std::size_t s = 0; s < S; ++s) {
      const double r = y[i] - fdraws(s, i);
      logs[s] = log_norm - 0.5 * r * r / v;
      mx = std::max(mx, logs[s]);
    }
    double acc = 0.0;
    for (std::size_t s = 0; s < S; ++s) acc += std::exp(logs[s] - mx);
    nll -= mx + std::log(acc / static_cast<double>(S));
  }
  return nll / static_cast<double>(n);
}

inline double rmse(const std::vector<double>& pred, const std::vector<double>& y) {
  if (pred.size() != y.size()) throw DimMismatch("rmse: size mismatch");
  if (pred.empty()) throw BadData("rmse: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - y[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

struct BernoulliPredictive {
  std::vector<double> p_mean;
  std::vector<double> aleatoric;  // E[p(1-p)] across draws
  std::vector<double> epistemic;  // Var[p] across draws
  std::vector<double> total;      // aleatoric + epistemic = E[p](1-E[p])
};

inline BernoulliPredictive predictive_bernoulli(const Matrix& fdraws) {
  const std::size_t S = fdraws.rows();
  const std::size_t n = fdraws.cols();
  if (S < 2) throw TooFewSamples("predictive: need at least 2 draws");
  BernoulliPredictive out;
  out.p_mean.assign(n, 0.0);
  out.aleatoric.assign(n, 0.0);
  out.epistemic.assign(n, 0.0);
  out.total.assign(n, 0.0);
  std::vector<double> psq(n, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    const double* row = fdraws.row(s);
    for (std::size_t i = 0; i < n; ++i) {
      const double pr = sigmoid(row[i]);
      out.p_mean[i] += pr;
      out.aleatoric[i] += pr * (1.0 - pr);
      psq[i] += pr * pr;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.p_mean[i] /= static_cast<double>(S);
    out.aleatoric[i] /= static_cast<double>(S);
    const double m2 = psq[i] / static_cast<double>(S);
    out.epistemic[i] = std::max(m2 - out.p_mean[i] * out.p_mean[i], 0.0);
    out.total[i] = out.aleatoric[i] + out.epistemic[i];
  }
  return out;
}

inline double bernoulli_nll(const Matrix& fdraws, const std::vector<double>& y) {
  const std::size_t S = fdraws.rows();
  const std::size_t n = fdraws.cols();
  if (y.size() != n) throw DimMismatch("bernoulli_nll: y size differs from draws");
  if (S < 1) throw TooFewSamples("bernoulli_nll: no draws");
  double nll = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double p = 0.0;
    for (std::size_t s = 0; s < S; ++s) p += sigmoid(fdraws(s, i));
    p /= static_cast<double>(S);
    p = std::min(std::max(p, 1e-12), 1.0 - 1e-12);
    nll -= y[i] > 0.5 ? std::log(p) : std::log(1.0 - p);
  }
  return nll / static_cast<double>(n);
}

}  // namespace gp2bnn

#endif  // GP2BNN_POSTERIOR_HPP
