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

#ifndef GP2BNN_CHECKPOINT_IO_HPP
#define GP2BNN_CHECKPOINT_IO_HPP

#include <fstream>
#include <string>

#include <json.hpp>

#include "gp2bnn/errors.hpp"
#include "gp2bnn/trainer.hpp"

namespace gp2bnn {

constexpr int kCheckpointVersion = 1;

inline nlohmann::json kernel_to_json(const KernelSpec& k) {
  nlohmann::json j;
  j["family"] = kernel_family_name(k.family);
  j["amplitude"] = k.amplitude;
  j["lengthscale"] = k.lengthscale;
  j["ard_lengthscales"] = k.ard_lengthscales;
  j["period"] = k.period;
  return j;
}

inline KernelSpec kernel_from_json(const nlohmann::json& j) {
  KernelSpec k;
  k.family = kernel_family_from_name(j.at("family").get<std::string>());
  k.amplitude = j.at("amplitude").get<double>();
  k.lengthscale = j.at("lengthscale").get<double>();
  k.ard_lengthscales = j.at("ard_lengthscales").get<std::vector<double>>();
  k.period = j.at("period").get<double>();
  return k;
}

inline nlohmann::json prior_to_json(const PriorParams& p) {
  if (p.activation.spec_string.empty())
    throw BadConfig("checkpoint: reference activation has no spec string");
  nlohmann::json j;
  j["width"] = p.width;
  j["input_dim"] = p.input_dim;
  j["sigma_b0"] = p.sigma_b0;
  j["sigma_w0"] = p.sigma_w0;
  j["sigma_bl"] = p.sigma_bl;
  j["sigma_wl"] = p.sigma_wl;
  j["activation"] = p.activation.spec_string;
  j["eta"] = p.activation.eta;
  return j;
}

inline PriorParams prior_from_json(const nlohmann::json& j) {
  PriorParams p;
  p.width = j.at("width").get<std::size_t>();
  p.input_dim = j.at("input_dim").get<std::size_t>();
  p.sigma_b0 = j.at("sigma_b0").get<double>();
  p.sigma_w0 = j.at("sigma_w0").get<double>();
  p.sigma_bl = j.at("sigma_bl").get<double>();
  p.sigma_wl = j.at("sigma_wl").get<double>();
  Rng structural(0);
  p.activation = make_activation(j.at("activation").get<std::string>(), structural);
  const auto eta = j.at("eta").get<std::vector<double>>();
  if (eta.size() != p.activation.eta.size())
    throw BadData("checkpoint: reference eta length does not match its spec");
  p.activation.eta = eta;
  return p;
}

inline nlohmann::json config_to_json(const TrainingConfig& c) {
  nlohmann::json j;
  j["width"] = c.width;
  j["input_dim"] = c.input_dim;
  j["activation"] = c.activation;
  j["kernel"] = kernel_to_json(c.kernel);
  j["self_target"] = c.self_target;
  if (c.self_target) j["reference"] = prior_to_json(c.reference);
  j["reference_samples"] = c.reference_samples;
  j["conditional"] = c.conditional;
  j["gamma_lo"] = c.gamma_lo;
  j["gamma_hi"] = c.gamma_hi;
  j["hypernet_hidden"] = c.hypernet_hidden;
  j["points_per_set"] = c.points_per_set;
  j["functions_per_set"] = c.functions_per_set;
  j["sets_per_batch"] = c.sets_per_batch;
  j["iterations"] = c.iterations;
  j["lr"] = c.lr;
  j["input_lo"] = c.input_lo;
  j["input_hi"] = c.input_hi;
  j["regularizer_weight"] = c.regularizer_weight;
  j["outlier_factor"] = c.outlier_factor;
  j["max_restarts"] = c.max_restarts;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  return j;
}

inline TrainingConfig config_from_json(const nlohmann::json& j) {
  TrainingConfig c;
  c.width = j.at("width").get<std::size_t>();
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.activation = j.at("activation").get<std::string>();
  c.kernel = kernel_from_json(j.at("kernel"));
  c.self_target = j.at("self_target").get<bool>();
  if (c.self_target) c.reference = prior_from_json(j.at("reference"));
  c.reference_samples = j.at("reference_samples").get<std::size_t>();
  c.conditional = j.at("conditional").get<bool>();
  c.gamma_lo = j.at("gamma_lo").get<double>();
  c.gamma_hi = j.at("gamma_hi").get<double>();
  c.hypernet_hidden = j.at("hypernet_hidden").get<std::vector<std::size_t>>();
  c.points_per_set = j.at("points_per_set").get<std::size_t>();
  c.functions_per_set = j.at("functions_per_set").get<std::size_t>();
  c.sets_per_batch = j.at("sets_per_batch").get<std::size_t>();
  c.iterations = j.at("iterations").get<std::size_t>();
  c.lr = j.at("lr").get<double>();
  c.input_lo = j.at("input_lo").get<double>();
  c.input_hi = j.at("input_hi").get<double>();
  c.regularizer_weight = j.at("regularizer_weight").get<double>();
  c.outlier_factor = j.at("outlier_factor").get<double>();
  c.max_restarts = j.at("max_restarts").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.workers = j.at("workers").get<int>();
  return c;
}

inline nlohmann::json checkpoint_to_json(const Checkpoint& c) {
  nlohmann::json j;
  j["version"] = c.version;
  j["mode"] = c.mode == ParamMode::Direct ? "direct" : "hypernet";
  j["n_eta"] = c.n_eta;
  j["values"] = c.values;
  j["hidden"] = c.hidden;
  j["final_loss"] = c.final_loss;
  j["failed"] = c.failed;
  j["trace"] = c.trace;
  j["config"] = config_to_json(c.config);
  return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  Checkpoint c;
  c.version = j.at("version").get<int>();
  if (c.version != kCheckpointVersion)
    throw BadConfig("checkpoint: unsupported version " + std::to_string(c.version));
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "direct")
    c.mode = ParamMode::Direct;
  else if (mode == "hypernet")
    c.mode = ParamMode::Hypernet;
  else
    throw BadData("checkpoint: unknown mode '" + mode + "'");
  c.n_eta = j.at("n_eta").get<std::size_t>();
  c.values = j.at("values").get<std::vector<double>>();
  c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  c.final_loss = j.at("final_loss").get<double>();
  c.failed = j.at("failed").get<bool>();
  c.trace = j.at("trace").get<std::vector<double>>();
  c.config = config_from_json(j.at("config"));
  return c;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& c) {
  std::ofstream out(path);
  if (!out) throw BadData("checkpoint: cannot open '" + path + "' for writing");
  out << checkpoint_to_json(c).dump(2) << "\n";
  if (!out) throw BadData("checkpoint: write to '" + path + "' failed");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw BadData("checkpoint: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
    return checkpoint_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw BadData("checkpoint: '" + path + "' is malformed: " + e.what());
  }
}

}  // namespace gp2bnn

#endif  // GP2BNN_CHECKPOINT_IO_HPP
