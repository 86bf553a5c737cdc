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

#ifndef GP2BNN_TRAINER_HPP
#define GP2BNN_TRAINER_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gp2bnn/adam.hpp"
#include "gp2bnn/bnn.hpp"
#include "gp2bnn/errors.hpp"
#include "gp2bnn/gp.hpp"
#include "gp2bnn/grad.hpp"
#include "gp2bnn/hypernet.hpp"
#include "gp2bnn/loss_metrics.hpp"
#include "gp2bnn/rng.hpp"

namespace gp2bnn {

struct TrainingConfig {
  // model
  std::size_t width = 128;
  std::size_t input_dim = 1;
  std::string activation = "nn:5:silu";

  // target: a GP kernel, or (self_target) a reference network prior whose
  // moments are estimated from reference_samples fresh draws per batch
  KernelSpec kernel;
  bool self_target = false;
  PriorParams reference;
  std::size_t reference_samples = 2048;

  // lengthscale-conditional training through a hypernetwork
  bool conditional = false;
  double gamma_lo = 0.25;
  double gamma_hi = 4.0;
  std::vector<std::size_t> hypernet_hidden = {128, 32, 8};

  // optimization
  std::size_t points_per_set = 256;
  std::size_t functions_per_set = 1024;
  std::size_t sets_per_batch = 1;
  std::size_t iterations = 2000;
  double lr = 0.01;
  double input_lo = 0.0;  // lo >= hi: use [-3 l, 3 l] from the lengthscale
  double input_hi = 0.0;
  double regularizer_weight = 0.0;
  double outlier_factor = 3.0;
  std::size_t max_restarts = 3;
  std::uint64_t seed = 1;
  int workers = 0;
};

struct TrainResult {
  ParamVector params;
  std::vector<std::size_t> hidden;  // hypernet layers; empty in direct mode
  double final_loss = 0.0;
  std::vector<double> trace;  // batch loss per iteration of the kept attempt
  bool failed = false;
  std::size_t attempts = 0;
};

using ProgressFn = std::function<void(std::size_t iteration, double batch_loss)>;

inline void validate_config(const TrainingConfig& cfg) {
  if (cfg.width < 1) throw BadConfig("config: width must be >= 1");
  if (cfg.input_dim < 1) throw BadConfig("config: input_dim must be >= 1");
  if (cfg.points_per_set < 2) throw BadConfig("config: points_per_set must be >= 2");
  if (cfg.functions_per_set < 2)
    throw BadConfig("config: functions_per_set must be >= 2");
  if (cfg.sets_per_batch < 1) throw BadConfig("config: sets_per_batch must be >= 1");
  if (cfg.iterations < 1) throw BadConfig("config: iterations must be >= 1");
  if (!(cfg.lr > 0.0)) throw BadConfig("config: lr must be > 0");
  if (!(cfg.outlier_factor >= 1.0))
    throw BadConfig("config: outlier_factor must be >= 1");
  if (cfg.conditional && cfg.self_target)
    throw BadConfig("config: conditional training needs a kernel target");
  if (cfg.conditional && !(cfg.gamma_lo > 0.0 && cfg.gamma_hi > cfg.gamma_lo))
    throw BadConfig("config: need 0 < gamma_lo < gamma_hi");
  if (cfg.conditional && cfg.hypernet_hidden.empty())
    throw BadConfig("config: hypernet needs at least one hidden layer");
  if (cfg.self_target) {
    cfg.reference.validate();
    if (cfg.reference.input_dim != cfg.input_dim)
      throw BadConfig("config: reference prior input_dim differs");
    if (cfg.reference_samples < 2)
      throw BadConfig("config: reference_samples must be >= 2");
  } else {
    cfg.kernel.validate(cfg.input_dim);
  }
}

namespace detail {

struct AttemptOutcome {
  bool completed = false;
  ParamVector params;
  std::vector<std::size_t> hidden;
  double final_loss = 0.0;
  std::vector<double> trace;
};

inline double tail_mean(const std::vector<double>& v, std::size_t window) {
  const std::size_t w = std::min(window, v.size());
  double acc = 0.0;
  for (std::size_t i = v.size() - w; i < v.size(); ++i) acc += v[i];
  return acc / static_cast<double>(w);
}

inline double best_window_mean(const std::vector<double>& v, std::size_t window) {
  const std::size_t w = std::min(window, v.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < w; ++i) acc += v[i];
  double best = acc;
  for (std::size_t i = w; i < v.size(); ++i) {
    acc += v[i] - v[i - w];
    best = std::min(best, acc);
  }
  return best / static_cast<double>(w);
}

inline AttemptOutcome run_attempt(const TrainingConfig& cfg, std::uint64_t attempt_seed,
                                  const ProgressFn& progress) {
  AttemptOutcome out;
  Rng init_rng(derive_seed(attempt_seed, 0x696e6974ULL));
  const ActivationModel act = make_activation(cfg.activation, init_rng);

  ModelShape shape;
  shape.width = cfg.width;
  shape.input_dim = cfg.input_dim;
  shape.act_template = act;

  Hypernetwork hnet;
  ParamVector p;
  if (cfg.conditional) {
    hnet.hidden = cfg.hypernet_hidden;
    hnet.n_eta = act.param_count();
    p = ParamVector::hypernet(hnet.init_theta(act, init_rng), hnet.n_eta);
    out.hidden = hnet.hidden;
  } else {
    p = ParamVector::direct(act);
  }

  AdamConfig acfg;
  acfg.lr = cfg.lr;
  Adam opt(p.size(), acfg);
  out.trace.reserve(cfg.iterations);

  try {
    std::vector<double> g(p.size());
    for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
      const std::uint64_t iter_seed = derive_seed(attempt_seed, 0x69746572ULL, iter);
      std::fill(g.begin(), g.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t s = 0; s < cfg.sets_per_batch; ++s) {
        Rng set_rng(derive_seed(iter_seed, 0x736574ULL, s));
        KernelSpec k = cfg.kernel;
        double gamma = 1.0;
        if (cfg.conditional) {
          gamma = set_rng.log_uniform(cfg.gamma_lo, cfg.gamma_hi);
          k.lengthscale = gamma;
        }
        double lo = cfg.input_lo, hi = cfg.input_hi;
        if (!(lo < hi)) {
          const double reach = 3.0 * k.lengthscale;
          lo = -reach;
          hi = reach;
        }
        const InputSet xs =
            InputSet::uniform_random(lo, hi, cfg.points_per_set, cfg.input_dim, set_rng);
        const std::uint64_t noise_seed = derive_seed(iter_seed, 0x6e6f6973ULL, s);

        BatchSpec batch = [&] {
          if (cfg.self_target) {
            const FunctionBatch ref =
                sample_functions(cfg.reference, xs, cfg.reference_samples,
                                 derive_seed(iter_seed, 0x726566ULL, s));
            return make_target_batch_spec(ref, xs, cfg.functions_per_set, noise_seed,
                                          cfg.regularizer_weight);
          }
          return make_gp_batch_spec(k, xs, cfg.functions_per_set, noise_seed,
                                    cfg.regularizer_weight);
        }();
        batch.gamma = gamma;
        batch.workers = cfg.workers;

        const LossResult r =
            loss_and_grad(p, shape, batch, cfg.conditional ? &hnet : nullptr);
        batch_loss += r.loss;
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += r.grad.values[i];
      }
      const double inv_sets = 1.0 / static_cast<double>(cfg.sets_per_batch);
      batch_loss *= inv_sets;
      for (double& v : g) v *= inv_sets;
      opt.step(p.values, g);
      out.trace.push_back(batch_loss);
      if (progress) progress(iter, batch_loss);
    }
  } catch (const NonFiniteLoss&) {
    return out;
  } catch (const NoConvergence&) {
    return out;
  } catch (const NotPositiveDefinite&) {
    return out;
  } catch (const DegenerateBatch&) {
    return out;
  }

  out.completed = true;
  out.params = std::move(p);
  out.final_loss = tail_mean(out.trace, 50);
  return out;
}

}  // namespace detail

// Fits the prior by stochastic gradient descent on the W2 loss against the
// configured target, drawing fresh input sets and noise every iteration.
// An attempt that diverges (non-finite numbers) or whose final loss exceeds
// outlier_factor times its own best rolling mean is rejected and restarted
// with a fresh initialization; the first accepted attempt is returned.  If
// every attempt is rejected, the best completed one is returned with the
// failed flag set, and AllRestartsFailed is thrown when none completed.
inline TrainResult fit_prior(const TrainingConfig& cfg, const ProgressFn& progress = {}) {
  validate_config(cfg);
  const std::size_t max_attempts = cfg.max_restarts + 1;
  detail::AttemptOutcome best;
  bool have_completed = false;
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    const std::uint64_t aseed = derive_seed(cfg.seed, 0x666974ULL, attempt);
    detail::AttemptOutcome out = detail::run_attempt(cfg, aseed, progress);
    if (!out.completed) continue;
    const double best_roll = detail::best_window_mean(out.trace, 50);
    if (out.final_loss <= cfg.outlier_factor * best_roll) {
      TrainResult r;
      r.params = std::move(out.params);
      r.hidden = std::move(out.hidden);
      r.final_loss = out.final_loss;
      r.trace = std::move(out.trace);
      r.failed = false;
      r.attempts = attempt + 1;
      return r;
    }
    if (!have_completed || out.final_loss < best.final_loss) {
      best = std::move(out);
      have_completed = true;
    }
  }
  if (!have_completed)
    throw AllRestartsFailed("fit_prior: every attempt diverged before finishing");
  TrainResult r;
  r.params = std::move(best.params);
  r.hidden = std::move(best.hidden);
  r.final_loss = best.final_loss;
  r.trace = std::move(best.trace);
  r.failed = true;
  r.attempts = max_attempts;
  return r;
}

// Self-contained record of a fitted prior, sufficient to rebuild it.
struct Checkpoint {
  int version = 1;
  TrainingConfig config;
  ParamMode mode = ParamMode::Direct;
  std::size_t n_eta = 0;
  std::vector<double> values;
  std::vector<std::size_t> hidden;
  double final_loss = 0.0;
  bool failed = false;
  std::vector<double> trace;
};

inline Checkpoint make_checkpoint(const TrainingConfig& cfg, const TrainResult& r) {
  Checkpoint c;
  c.config = cfg;
  c.mode = r.params.mode;
  c.n_eta = r.params.n_eta;
  c.values = r.params.values;
  c.hidden = r.hidden;
  c.final_loss = r.final_loss;
  c.failed = r.failed;
  c.trace = r.trace;
  return c;
}

// Rebuilds the concrete prior stored in a checkpoint; conditional
// checkpoints are resolved at the given gamma.
inline PriorParams checkpoint_prior(const Checkpoint& c, double gamma = 1.0) {
  Rng structural(0);  // eta is overwritten, only the shape matters
  const ActivationModel act = make_activation(c.config.activation, structural);
  if (act.param_count() != c.n_eta)
    throw BadConfig("checkpoint: activation spec does not match n_eta");
  ModelShape shape;
  shape.width = c.config.width;
  shape.input_dim = c.config.input_dim;
  shape.act_template = act;
  ParamVector p;
  p.mode = c.mode;
  p.n_eta = c.n_eta;
  p.values = c.values;
  if (c.mode == ParamMode::Hypernet) {
    Hypernetwork hnet;
    hnet.hidden = c.hidden;
    hnet.n_eta = c.n_eta;
    return resolve_prior(p, shape, &hnet, gamma);
  }
  return resolve_prior(p, shape);
}

// Compares draws from the fitted prior against draws from a GP with the
// given kernel on the same inputs.  Conditional checkpoints are resolved at
// gamma equal to the kernel lengthscale.
inline MetricReport evaluate_prior(const Checkpoint& c, const KernelSpec& eval_kernel,
                                   const InputSet& xs, std::size_t n_draws,
                                   std::uint64_t seed) {
  eval_kernel.validate(xs.dim());
  const PriorParams prior = checkpoint_prior(c, eval_kernel.lengthscale);
  const FunctionBatch net =
      sample_functions(prior, xs, n_draws, derive_seed(seed, 0x65766e6eULL));
  const FunctionBatch gpb = sample_gp(eval_kernel, xs, n_draws,
                                      derive_seed(seed, 0x65766770ULL));
  return metric_report(net, gpb);
}

}  // namespace gp2bnn

#endif  // GP2BNN_TRAINER_HPP
