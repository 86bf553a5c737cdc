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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gp2bnn/checkpoint_io.hpp"
#include "gp2bnn/dataset.hpp"
#include "gp2bnn/posterior.hpp"
#include "gp2bnn/trainer.hpp"

using nlohmann::json;
using namespace gp2bnn;

namespace {

// ---------------------------------------------------------------- formatting

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> parse_double_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      out.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw BadConfig(std::string(what) + ": cannot parse '" + cell + "'");
    }
  }
  if (out.empty()) throw BadConfig(std::string(what) + ": empty list");
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& s, const char* what) {
  std::vector<std::size_t> out;
  for (double v : parse_double_list(s, what)) {
    if (v < 1.0 || v != std::floor(v))
      throw BadConfig(std::string(what) + ": entries must be positive integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw BadData("cannot open '" + path + "' for writing");
  return out;
}

// Rows are grid points: the input coordinates, then one column per draw.
void write_draws_csv(const std::string& path, const Matrix& pts, const Matrix& draws) {
  std::ofstream out = open_out(path);
  out << "# x_0..x_" << pts.cols() - 1 << ",f_0..f_" << draws.rows() - 1 << '\n';
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    for (std::size_t d = 0; d < pts.cols(); ++d) out << fmt(pts(i, d)) << ',';
    for (std::size_t s = 0; s < draws.rows(); ++s) {
      out << fmt(draws(s, i));
      out << (s + 1 < draws.rows() ? ',' : '\n');
    }
  }
  if (!out) throw BadData("write to '" + path + "' failed");
}

void write_trace_csv(const std::string& path, const std::vector<double>& trace) {
  std::ofstream out = open_out(path);
  out << "# iteration,loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i)
    out << i << ',' << fmt(trace[i]) << '\n';
  if (!out) throw BadData("write to '" + path + "' failed");
}

// Named columns over a shared input grid.
void write_table_csv(const std::string& path, const Matrix& pts,
                     const std::vector<std::pair<std::string, const std::vector<double>*>>& cols) {
  std::ofstream out = open_out(path);
  out << "#";
  for (std::size_t d = 0; d < pts.cols(); ++d) out << " x_" << d << ',';
  for (std::size_t c = 0; c < cols.size(); ++c)
    out << cols[c].first << (c + 1 < cols.size() ? "," : "");
  out << '\n';
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    for (std::size_t d = 0; d < pts.cols(); ++d) out << fmt(pts(i, d)) << ',';
    for (std::size_t c = 0; c < cols.size(); ++c) {
      out << fmt((*cols[c].second)[i]);
      out << (c + 1 < cols.size() ? ',' : '\n');
    }
  }
  if (!out) throw BadData("write to '" + path + "' failed");
}

json metric_report_json(const MetricReport& r) {
  json j;
  j["w1"] = r.w1;
  j["w2"] = r.w2;
  j["mmd_linear"] = r.mmd_linear;
  j["mmd_poly"] = r.mmd_poly;
  j["mmd_rbf"] = r.mmd_rbf;
  j["rbf_bandwidth"] = r.rbf_bandwidth;
  j["mean_mse"] = r.mean_mse;
  j["mean_l2"] = r.mean_l2;
  j["mean_l1"] = r.mean_l1;
  j["median_mse"] = r.median_mse;
  j["median_l2"] = r.median_l2;
  j["median_l1"] = r.median_l1;
  j["n_functions_a"] = r.n_functions_a;
  j["n_functions_b"] = r.n_functions_b;
  j["n_points"] = r.n_points;
  return j;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw BadData("write to '" + path + "' failed");
}

// ------------------------------------------------------------------ svg plot

struct FanLayer {
  const Matrix* draws;  // n_draws x n_points
  const char* fill;
  const char* stroke;
  std::string label;
};

double quantile_of(std::vector<double>& v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[hi];
}

// Quantile fan over a 1-D grid: 5-95 and 25-75 bands plus the median line.
void write_fan_svg(const std::string& path, const std::vector<double>& xs,
                   const std::vector<FanLayer>& layers) {
  const double W = 720, H = 420, ML = 60, MR = 20, MT = 30, MB = 40;
  const std::size_t n = xs.size();
  const double qs[5] = {0.05, 0.25, 0.5, 0.75, 0.95};

  std::vector<std::vector<std::vector<double>>> bands(layers.size());
  double ymin = 1e300, ymax = -1e300;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    bands[l].assign(5, std::vector<double>(n));
    std::vector<double> col(layers[l].draws->rows());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t s = 0; s < col.size(); ++s) col[s] = (*layers[l].draws)(s, i);
      for (int q = 0; q < 5; ++q) {
        bands[l][q][i] = quantile_of(col, qs[q]);
        ymin = std::min(ymin, bands[l][q][i]);
        ymax = std::max(ymax, bands[l][q][i]);
      }
    }
  }
  if (!(ymax > ymin)) {
    ymin -= 1.0;
    ymax += 1.0;
  }
  const double pad = 0.08 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;
  const double xmin = xs.front(), xmax = xs.back();

  const auto px = [&](double x) {
    return ML + (x - xmin) / (xmax - xmin) * (W - ML - MR);
  };
  const auto py = [&](double y) {
    return H - MB - (y - ymin) / (ymax - ymin) * (H - MT - MB);
  };

  std::ofstream out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\""
      << H << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";

  char num[64];
  const auto band_path = [&](const std::vector<double>& lo, const std::vector<double>& hi) {
    std::string d = "M";
    for (std::size_t i = 0; i < n; ++i) {
      std::snprintf(num, sizeof num, " %.2f %.2f", px(xs[i]), py(hi[i]));
      d += num;
    }
    for (std::size_t i = n; i-- > 0;) {
      std::snprintf(num, sizeof num, " %.2f %.2f", px(xs[i]), py(lo[i]));
      d += num;
    }
    return d + " Z";
  };

  for (std::size_t l = 0; l < layers.size(); ++l) {
    out << "<path d=\"" << band_path(bands[l][0], bands[l][4]) << "\" fill=\""
        << layers[l].fill << "\" fill-opacity=\"0.25\" stroke=\"none\"/>\n";
    out << "<path d=\"" << band_path(bands[l][1], bands[l][3]) << "\" fill=\""
        << layers[l].fill << "\" fill-opacity=\"0.35\" stroke=\"none\"/>\n";
    out << "<polyline fill=\"none\" stroke=\"" << layers[l].stroke
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < n; ++i) {
      std::snprintf(num, sizeof num, "%.2f,%.2f ", px(xs[i]), py(bands[l][2][i]));
      out << num;
    }
    out << "\"/>\n";
  }

  out << "<rect x=\"" << ML << "\" y=\"" << MT << "\" width=\"" << W - ML - MR
      << "\" height=\"" << H - MT - MB
      << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double x = xmin + (xmax - xmin) * t / 4.0;
    const double y = ymin + (ymax - ymin) * t / 4.0;
    std::snprintf(num, sizeof num, "%.3g", x);
    out << "<text x=\"" << px(x) << "\" y=\"" << H - MB + 16
        << "\" font-size=\"11\" text-anchor=\"middle\">" << num << "</text>\n";
    std::snprintf(num, sizeof num, "%.3g", y);
    out << "<text x=\"" << ML - 6 << "\" y=\"" << py(y) + 4
        << "\" font-size=\"11\" text-anchor=\"end\">" << num << "</text>\n";
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const double ly = MT + 16 + 16 * static_cast<double>(l);
    out << "<rect x=\"" << ML + 10 << "\" y=\"" << ly - 9
        << "\" width=\"12\" height=\"12\" fill=\"" << layers[l].fill
        << "\" fill-opacity=\"0.4\"/>\n";
    out << "<text x=\"" << ML + 27 << "\" y=\"" << ly + 1 << "\" font-size=\"12\">"
        << layers[l].label << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw BadData("write to '" + path + "' failed");
}

// ----------------------------------------------------------- config plumbing

// Merges a JSON config file into the argument list.  Keys mirror the long
// option names of the chosen subcommand; values given on the command line
// win.  Unknown keys are an error.
std::vector<std::string> apply_config_file(CLI::App* sub, const std::string& path,
                                           std::vector<std::string> args) {
  std::ifstream in(path);
  if (!in) throw BadConfig("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw BadConfig("config: '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw BadConfig("config: '" + path + "' must hold an object");
  if (j.contains("version") && j["version"] != 1)
    throw BadConfig("config: unsupported version in '" + path + "'");

  const auto given = [&](const std::string& flag) {
    for (const auto& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
  };

  for (const auto& [key, value] : j.items()) {
    if (key == "version") continue;
    const std::string flag = "--" + key;
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    if (opt == nullptr)
      throw BadConfig("config: unknown key '" + key + "' for " + sub->get_name());
    if (given(flag)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_string()) {
      args.push_back(flag + "=" + value.get<std::string>());
    } else if (value.is_number()) {
      args.push_back(flag + "=" + value.dump());
    } else {
      throw BadConfig("config: key '" + key + "' must be a scalar");
    }
  }
  return args;
}

// --------------------------------------------------------------- subcommands

struct FitPriorArgs {
  std::string out, activation = "nn:5:silu", trace;
  std::size_t width = 128, input_dim = 1;
  std::string kernel = "rbf", ard;
  double lengthscale = 1.0, amplitude = 1.0, period = 1.0;
  std::size_t points = 256, functions = 1024, sets = 1, iterations = 2000;
  double lr = 0.01, reg_weight = 0.0, outlier_factor = 3.0;
  double range_lo = 0.0, range_hi = 0.0;
  std::size_t restarts = 3, seed = 1, progress = 0;
  int workers = 0;
  bool conditional = false;
  double gamma_lo = 0.25, gamma_hi = 4.0;
  std::string hyper_hidden = "128,32,8";
};

void add_kernel_options(CLI::App* sub, std::string& family, double& lengthscale,
                        double& amplitude, double& period, std::string& ard) {
  sub->add_option("--kernel", family,
                  "kernel family: rbf, matern12, matern32, matern52, periodic, rbf_ard");
  sub->add_option("--lengthscale", lengthscale, "kernel lengthscale");
  sub->add_option("--amplitude", amplitude, "kernel amplitude (std dev scale)");
  sub->add_option("--period", period, "period for the periodic kernel");
  sub->add_option("--ard", ard, "comma list of per-dimension lengthscales (rbf_ard)");
}

KernelSpec build_kernel(const std::string& family, double lengthscale, double amplitude,
                        double period, const std::string& ard) {
  KernelSpec k;
  k.family = kernel_family_from_name(family);
  k.lengthscale = lengthscale;
  k.amplitude = amplitude;
  k.period = period;
  if (!ard.empty()) k.ard_lengthscales = parse_double_list(ard, "--ard");
  return k;
}

int run_fit_prior(const FitPriorArgs& a) {
  TrainingConfig cfg;
  cfg.width = a.width;
  cfg.input_dim = a.input_dim;
  cfg.activation = a.activation;
  cfg.kernel = build_kernel(a.kernel, a.lengthscale, a.amplitude, a.period, a.ard);
  cfg.conditional = a.conditional;
  cfg.gamma_lo = a.gamma_lo;
  cfg.gamma_hi = a.gamma_hi;
  cfg.hypernet_hidden = parse_size_list(a.hyper_hidden, "--hyper-hidden");
  cfg.points_per_set = a.points;
  cfg.functions_per_set = a.functions;
  cfg.sets_per_batch = a.sets;
  cfg.iterations = a.iterations;
  cfg.lr = a.lr;
  cfg.input_lo = a.range_lo;
  cfg.input_hi = a.range_hi;
  cfg.regularizer_weight = a.reg_weight;
  cfg.outlier_factor = a.outlier_factor;
  cfg.max_restarts = a.restarts;
  cfg.seed = a.seed;
  cfg.workers = a.workers;

  ProgressFn progress;
  if (a.progress > 0) {
    const std::size_t every = a.progress;
    progress = [every](std::size_t it, double loss) {
      if (it % every == 0)
        std::fprintf(stderr, "iter %zu loss %.6g\n", it, loss);
    };
  }

  const TrainResult r = fit_prior(cfg, progress);
  save_checkpoint(a.out, make_checkpoint(cfg, r));
  if (!a.trace.empty()) write_trace_csv(a.trace, r.trace);
  if (r.failed)
    std::fprintf(stderr, "warning: every attempt hit the restart policy; "
                         "kept the best completed run\n");
  std::printf("fit-prior: final_loss=%s attempts=%zu failed=%d -> %s\n",
              fmt(r.final_loss).c_str(), r.attempts, r.failed ? 1 : 0,
              a.out.c_str());
  return 0;
}

struct EvalPriorArgs {
  std::string ckpt, out_json, out_csv, svg;
  double range_lo = -3.0, range_hi = 3.0, shift = 10.0, gamma = 0.0;
  std::size_t points = 64, draws = 2048, seed = 1;
};

int run_eval_prior(const EvalPriorArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.ckpt);
  if (ckpt.config.input_dim != 1)
    throw BadConfig("eval-prior: only 1-D checkpoints are supported");
  if (!(a.range_hi > a.range_lo))
    throw BadConfig("eval-prior: need range-lo < range-hi");

  KernelSpec kernel = ckpt.config.kernel;
  if (a.gamma > 0.0) kernel.lengthscale = a.gamma;

  const InputSet xs = InputSet::linspace(a.range_lo, a.range_hi, a.points);
  InputSet shifted = xs;
  for (std::size_t i = 0; i < shifted.size(); ++i) shifted.points(i, 0) += a.shift;

  const MetricReport in_range = evaluate_prior(ckpt, kernel, xs, a.draws, a.seed);
  const MetricReport out_range =
      evaluate_prior(ckpt, kernel, shifted, a.draws, derive_seed(a.seed, 0x73686674ULL));

  json j;
  j["version"] = 1;
  j["checkpoint"] = a.ckpt;
  j["lengthscale"] = kernel.lengthscale;
  j["shift"] = a.shift;
  j["in_range"] = metric_report_json(in_range);
  j["shifted"] = metric_report_json(out_range);
  if (!a.out_json.empty()) write_json_file(a.out_json, j);

  if (!a.out_csv.empty()) {
    std::ofstream out = open_out(a.out_csv);
    out << "# region,w1,w2,mmd_linear,mmd_poly,mmd_rbf,mean_mse,median_mse\n";
    const auto row = [&](const char* name, const MetricReport& r) {
      out << name << ',' << fmt(r.w1) << ',' << fmt(r.w2) << ',' << fmt(r.mmd_linear)
          << ',' << fmt(r.mmd_poly) << ',' << fmt(r.mmd_rbf) << ',' << fmt(r.mean_mse)
          << ',' << fmt(r.median_mse) << '\n';
    };
    row("in_range", in_range);
    row("shifted", out_range);
    if (!out) throw BadData("write to '" + a.out_csv + "' failed");
  }

  if (!a.svg.empty()) {
    const std::size_t n_plot = std::min<std::size_t>(a.draws, 256);
    const PriorParams prior = checkpoint_prior(ckpt, kernel.lengthscale);
    const FunctionBatch net =
        sample_functions(prior, xs, n_plot, derive_seed(a.seed, 0x65766e6eULL));
    const FunctionBatch gpb =
        sample_gp(kernel, xs, n_plot, derive_seed(a.seed, 0x65766770ULL));
    std::vector<double> grid(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) grid[i] = xs.points(i, 0);
    write_fan_svg(a.svg, grid,
                  {{&net.values, "#1f77b4", "#1f77b4", "network prior"},
                   {&gpb.values, "#ff7f0e", "#ff7f0e", "gp target"}});
  }

  std::printf("eval-prior: in_range w2=%s shifted w2=%s\n",
              fmt(in_range.w2).c_str(), fmt(out_range.w2).c_str());
  return 0;
}

struct FitPosteriorArgs {
  std::string ckpt, data, test_data, out_prefix, likelihood = "gaussian";
  double noise_var = 0.1, target_accept = 0.8, step = 0.0, gamma = 0.0;
  std::size_t chains = 4, warmup = 500, samples = 1000, leapfrog = 32, seed = 1;
};

int run_fit_posterior(const FitPosteriorArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.ckpt);
  const double gamma = a.gamma > 0.0 ? a.gamma : ckpt.config.kernel.lengthscale;

  PosteriorModel model;
  model.prior = checkpoint_prior(ckpt, gamma);
  model.noise_var = a.noise_var;
  if (a.likelihood == "gaussian") {
    model.likelihood = Likelihood::Gaussian;
  } else if (a.likelihood == "bernoulli") {
    model.likelihood = Likelihood::BernoulliLogit;
  } else {
    throw BadConfig("fit-posterior: --likelihood must be gaussian or bernoulli");
  }

  const Dataset train = load_csv(a.data);
  Dataset test;
  const bool have_test = !a.test_data.empty();
  if (have_test) test = load_csv(a.test_data);

  HmcConfig cfg;
  cfg.n_chains = a.chains;
  cfg.n_warmup = a.warmup;
  cfg.n_samples = a.samples;
  cfg.n_leapfrog = a.leapfrog;
  cfg.target_accept = a.target_accept;
  cfg.init_step = a.step;
  cfg.seed = a.seed;

  const HmcResult res = hmc_run(model, train, cfg);

  for (std::size_t c = 0; c < res.chains.size(); ++c) {
    std::ofstream out = open_out(a.out_prefix + "_chain" + std::to_string(c) + ".csv");
    out << "# one row per draw, one column per weight\n";
    const Matrix& D = res.chains[c].draws;
    for (std::size_t s = 0; s < D.rows(); ++s)
      for (std::size_t i = 0; i < D.cols(); ++i)
        out << fmt(D(s, i)) << (i + 1 < D.cols() ? ',' : '\n');
    if (!out) throw BadData("chain write failed");
  }

  json j;
  j["version"] = 1;
  j["checkpoint"] = a.ckpt;
  j["likelihood"] = a.likelihood;
  j["accept_rate"] = res.accept_rate;
  j["divergence_count"] = res.divergence_count;
  j["total_draws"] = res.total_draws();
  json chains = json::array();
  for (const auto& c : res.chains)
    chains.push_back({{"step_size", c.step_size},
                      {"accept_rate", c.accept_rate},
                      {"divergences", c.divergences}});
  j["chains"] = chains;

  const Dataset& eval_on = have_test ? test : train;
  const Matrix fdraws = posterior_functions(model, res, eval_on.x);
  const char* split = have_test ? "test" : "train";
  if (model.likelihood == Likelihood::Gaussian) {
    const PredictiveSummary ps = predictive_regression(model, fdraws);
    j[std::string(split) + "_rmse"] = rmse(ps.mean, eval_on.y);
    j[std::string(split) + "_nll"] = regression_nll(model, fdraws, eval_on.y);
    write_table_csv(a.out_prefix + "_predictive.csv", eval_on.x,
                    {{"mean", &ps.mean},
                     {"epistemic_var", &ps.epistemic_var},
                     {"total_var", &ps.total_var}});
  } else {
    const BernoulliPredictive bp = predictive_bernoulli(fdraws);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < eval_on.size(); ++i)
      if ((bp.p_mean[i] > 0.5) == (eval_on.y[i] > 0.5)) ++correct;
    j[std::string(split) + "_accuracy"] =
        static_cast<double>(correct) / static_cast<double>(eval_on.size());
    j[std::string(split) + "_nll"] = bernoulli_nll(fdraws, eval_on.y);
    write_table_csv(a.out_prefix + "_predictive.csv", eval_on.x,
                    {{"p_mean", &bp.p_mean},
                     {"aleatoric", &bp.aleatoric},
                     {"epistemic", &bp.epistemic},
                     {"total", &bp.total}});
  }
  write_json_file(a.out_prefix + "_summary.json", j);

  std::printf("fit-posterior: accept=%.3f divergences=%zu -> %s_summary.json\n",
              res.accept_rate, res.divergence_count, a.out_prefix.c_str());
  return 0;
}

struct SampleArgs {
  std::string ckpt, out, svg;
  std::string kernel, ard;
  double lengthscale = 1.0, amplitude = 1.0, period = 1.0, gamma = 0.0;
  double range_lo = -3.0, range_hi = 3.0;
  std::size_t points = 128, n = 16, seed = 1;
};

int run_sample(const SampleArgs& a) {
  if (a.n == 0) throw BadConfig("sample: need at least one draw (--n)");
  if (!(a.range_hi > a.range_lo)) throw BadConfig("sample: need range-lo < range-hi");
  if (a.ckpt.empty() == a.kernel.empty())
    throw BadConfig("sample: pass exactly one of --ckpt or --kernel");

  const InputSet xs = InputSet::linspace(a.range_lo, a.range_hi, a.points);
  FunctionBatch batch;
  if (!a.ckpt.empty()) {
    const Checkpoint ckpt = load_checkpoint(a.ckpt);
    if (ckpt.config.input_dim != 1)
      throw BadConfig("sample: only 1-D checkpoints are supported");
    const double gamma = a.gamma > 0.0 ? a.gamma : ckpt.config.kernel.lengthscale;
    batch = sample_functions(checkpoint_prior(ckpt, gamma), xs, a.n, a.seed);
  } else {
    const KernelSpec k =
        build_kernel(a.kernel, a.lengthscale, a.amplitude, a.period, a.ard);
    batch = sample_gp(k, xs, a.n, a.seed);
  }

  write_draws_csv(a.out, xs.points, batch.values);
  if (!a.svg.empty()) {
    std::vector<double> grid(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) grid[i] = xs.points(i, 0);
    const char* color = a.ckpt.empty() ? "#ff7f0e" : "#1f77b4";
    write_fan_svg(a.svg, grid,
                  {{&batch.values, color, color,
                    a.ckpt.empty() ? "gp draws" : "network draws"}});
  }
  std::printf("sample: %zu draws on %zu points -> %s\n", a.n, a.points, a.out.c_str());
  return 0;
}

struct MakeDataArgs {
  std::string kind = "regression", out;
  std::size_t n = 40, seed = 1;
  double noise = 0.1;
};

int run_make_data(const MakeDataArgs& a) {
  Dataset d;
  if (a.kind == "regression") {
    d = make_regression_demo(a.n, a.noise, a.seed);
  } else if (a.kind == "two-moons") {
    d = make_two_moons(a.n, a.noise, a.seed);
  } else {
    throw BadConfig("make-data: --kind must be regression or two-moons");
  }
  save_csv(a.out, d);
  std::printf("make-data: %zu rows -> %s\n", a.n, a.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"function-space prior transfer between GPs and single-hidden-layer BNNs"};
  app.require_subcommand(1);

  FitPriorArgs fa;
  CLI::App* fit = app.add_subcommand("fit-prior", "fit network prior scales to a GP");
  fit->add_option("--out", fa.out, "checkpoint output path")->required();
  fit->add_option("--activation", fa.activation, "activation spec");
  fit->add_option("--width", fa.width, "hidden units");
  fit->add_option("--input-dim", fa.input_dim, "input dimension");
  add_kernel_options(fit, fa.kernel, fa.lengthscale, fa.amplitude, fa.period, fa.ard);
  fit->add_option("--points", fa.points, "input points per batch");
  fit->add_option("--functions", fa.functions, "function draws per batch");
  fit->add_option("--sets", fa.sets, "input sets per iteration");
  fit->add_option("--iterations", fa.iterations, "optimizer iterations");
  fit->add_option("--lr", fa.lr, "Adam learning rate");
  fit->add_option("--reg-weight", fa.reg_weight, "moment regularizer weight");
  fit->add_option("--outlier-factor", fa.outlier_factor, "restart outlier factor");
  fit->add_option("--range-lo", fa.range_lo, "training input lower bound");
  fit->add_option("--range-hi", fa.range_hi, "training input upper bound");
  fit->add_option("--restarts", fa.restarts, "extra attempts after a bad run");
  fit->add_option("--seed", fa.seed, "rng seed");
  fit->add_option("--workers", fa.workers, "worker threads (0 = auto)");
  fit->add_option("--progress", fa.progress, "print loss every N iterations");
  fit->add_flag("--conditional", fa.conditional, "train a lengthscale-conditional prior");
  fit->add_option("--gamma-lo", fa.gamma_lo, "conditional lengthscale lower bound");
  fit->add_option("--gamma-hi", fa.gamma_hi, "conditional lengthscale upper bound");
  fit->add_option("--hyper-hidden", fa.hyper_hidden, "hypernetwork layer sizes");
  fit->add_option("--trace", fa.trace, "write the loss trace to this CSV");

  EvalPriorArgs ea;
  CLI::App* eval = app.add_subcommand("eval-prior", "score a checkpoint against a GP");
  eval->add_option("--ckpt", ea.ckpt, "checkpoint path")->required();
  eval->add_option("--range-lo", ea.range_lo, "evaluation grid lower bound");
  eval->add_option("--range-hi", ea.range_hi, "evaluation grid upper bound");
  eval->add_option("--points", ea.points, "evaluation grid size");
  eval->add_option("--shift", ea.shift, "offset for the out-of-range grid");
  eval->add_option("--gamma", ea.gamma, "override the evaluation lengthscale");
  eval->add_option("--draws", ea.draws, "function draws per side");
  eval->add_option("--seed", ea.seed, "rng seed");
  eval->add_option("--out-json", ea.out_json, "write the metric report here");
  eval->add_option("--out-csv", ea.out_csv, "write a metric table here");
  eval->add_option("--svg", ea.svg, "write a fan plot here");

  FitPosteriorArgs pa;
  CLI::App* post = app.add_subcommand("fit-posterior", "run HMC under a fitted prior");
  post->add_option("--ckpt", pa.ckpt, "checkpoint path")->required();
  post->add_option("--data", pa.data, "training data CSV")->required();
  post->add_option("--out-prefix", pa.out_prefix, "output file prefix")->required();
  post->add_option("--likelihood", pa.likelihood, "gaussian or bernoulli");
  post->add_option("--noise-var", pa.noise_var, "observation noise variance");
  post->add_option("--test-data", pa.test_data, "held-out data CSV");
  post->add_option("--gamma", pa.gamma, "conditional prior lengthscale");
  post->add_option("--chains", pa.chains, "number of chains");
  post->add_option("--warmup", pa.warmup, "warmup iterations per chain");
  post->add_option("--samples", pa.samples, "kept draws per chain");
  post->add_option("--leapfrog", pa.leapfrog, "leapfrog steps per draw");
  post->add_option("--target-accept", pa.target_accept, "step size adaptation target");
  post->add_option("--step", pa.step, "fixed initial step size (0 = auto)");
  post->add_option("--seed", pa.seed, "rng seed");

  SampleArgs sa;
  CLI::App* samp = app.add_subcommand("sample", "draw functions from a prior or GP");
  samp->add_option("--ckpt", sa.ckpt, "checkpoint path");
  add_kernel_options(samp, sa.kernel, sa.lengthscale, sa.amplitude, sa.period, sa.ard);
  samp->add_option("--gamma", sa.gamma, "conditional prior lengthscale");
  samp->add_option("--range-lo", sa.range_lo, "grid lower bound");
  samp->add_option("--range-hi", sa.range_hi, "grid upper bound");
  samp->add_option("--points", sa.points, "grid size");
  samp->add_option("--n", sa.n, "number of draws");
  samp->add_option("--seed", sa.seed, "rng seed");
  samp->add_option("--out", sa.out, "draws CSV path")->required();
  samp->add_option("--svg", sa.svg, "write a fan plot here");

  MakeDataArgs ma;
  CLI::App* mk = app.add_subcommand("make-data", "write a toy dataset CSV");
  mk->add_option("--kind", ma.kind, "regression or two-moons");
  mk->add_option("--n", ma.n, "number of rows");
  mk->add_option("--noise", ma.noise, "noise standard deviation");
  mk->add_option("--seed", ma.seed, "rng seed");
  mk->add_option("--out", ma.out, "output CSV path")->required();

  std::vector<std::string> args(argv + 1, argv + argc);

  // pull out --config before the real parse
  std::string config_path;
  for (std::size_t i = 0; i < args.size();) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + i);
    } else {
      ++i;
    }
  }

  try {
    if (!config_path.empty()) {
      CLI::App* sub = nullptr;
      for (const auto& a : args)
        if (!a.empty() && a[0] != '-') {
          sub = app.get_subcommand_no_throw(a);
          break;
        }
      if (sub == nullptr)
        throw BadConfig("config: give the subcommand before --config options");
      args = apply_config_file(sub, config_path, args);
    }

    std::vector<const char*> cargv;
    cargv.push_back(argv[0]);
    for (const auto& a : args) cargv.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? 0 : 1;
    }

    if (fit->parsed()) return run_fit_prior(fa);
    if (eval->parsed()) return run_eval_prior(ea);
    if (post->parsed()) return run_fit_posterior(pa);
    if (samp->parsed()) return run_sample(sa);
    if (mk->parsed()) return run_make_data(ma);
    return 1;
  } catch (const AllRestartsFailed& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const Diverged& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
