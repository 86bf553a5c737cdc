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

#ifndef GP2BNN_DATASET_HPP
#define GP2BNN_DATASET_HPP

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gp2bnn/errors.hpp"
#include "gp2bnn/linalg.hpp"
#include "gp2bnn/rng.hpp"

namespace gp2bnn {

struct Dataset {
  Matrix x;  // n x input_dim
  std::vector<double> y;

  std::size_t size() const { return x.rows(); }
  std::size_t dim() const { return x.cols(); }

  void validate() const {
    if (x.rows() == 0 || x.cols() == 0) throw BadData("dataset: empty");
    if (y.size() != x.rows()) throw BadData("dataset: x and y sizes differ");
    for (double v : x.data())
      if (!std::isfinite(v)) throw BadData("dataset: non-finite input value");
    for (double v : y)
      if (!std::isfinite(v)) throw BadData("dataset: non-finite target value");
  }
};

// Plain CSV, one row per observation: d input columns then the target.
// Lines starting with '#' and blank lines are skipped; no header.
inline Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw BadData("dataset: cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
          ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
        vals.push_back(v);
      } catch (const std::exception&) {
        throw BadData("dataset: '" + path + "' line " + std::to_string(lineno) +
                      ": cannot parse '" + cell + "'");
      }
    }
    if (vals.size() < 2)
      throw BadData("dataset: '" + path + "' line " + std::to_string(lineno) +
                    ": need at least one input column and a target");
    if (!rows.empty() && vals.size() != rows.front().size())
      throw BadData("dataset: '" + path + "' line " + std::to_string(lineno) +
                    ": inconsistent column count");
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw BadData("dataset: '" + path + "' has no data rows");

  Dataset d;
  const std::size_t dim = rows.front().size() - 1;
  d.x = Matrix(rows.size(), dim);
  d.y.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < dim; ++j) d.x(i, j) = rows[i][j];
    d.y[i] = rows[i][dim];
  }
  d.validate();
  return d;
}

inline void save_csv(const std::string& path, const Dataset& d) {
  d.validate();
  std::ofstream out(path);
  if (!out) throw BadData("dataset: cannot open '" + path + "' for writing");
  char buf[64];
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = 0; j < d.dim(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", d.x(i, j));
      out << buf << ',';
    }
    std::snprintf(buf, sizeof buf, "%.17g", d.y[i]);
    out << buf << '\n';
  }
  if (!out) throw BadData("dataset: write to '" + path + "' failed");
}

// 1-D regression toy: y = sin(2x) + 0.2 x^2 + noise, x uniform in [-3, 3].
inline Dataset make_regression_demo(std::size_t n, double noise_sd, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x72656764656dULL));
  Dataset d;
  d.x = Matrix(n, 1);
  d.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform(-3.0, 3.0);
    d.x(i, 0) = x;
    d.y[i] = std::sin(2.0 * x) + 0.2 * x * x + noise_sd * rng.normal();
  }
  return d;
}

// Classic two-moons classification toy in two dimensions, labels 0 / 1.
inline Dataset make_two_moons(std::size_t n, double noise_sd, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x6d6f6f6e73ULL));
  Dataset d;
  d.x = Matrix(n, 2);
  d.y.resize(n);
  const double pi = 3.14159265358979323846;
  for (std::size_t i = 0; i < n; ++i) {
    const bool upper = i % 2 == 0;
    const double t = pi * rng.uniform();
    double px, py;
    if (upper) {
      px = std::cos(t);
      py = std::sin(t);
    } else {
      px = 1.0 - std::cos(t);
      py = 0.5 - std::sin(t);
    }
    d.x(i, 0) = px + noise_sd * rng.normal();
    d.x(i, 1) = py + noise_sd * rng.normal();
    d.y[i] = upper ? 1.0 : 0.0;
  }
  return d;
}

}  // namespace gp2bnn

#endif  // GP2BNN_DATASET_HPP
