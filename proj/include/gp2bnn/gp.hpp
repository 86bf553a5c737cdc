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

#ifndef GP2BNN_GP_HPP
#define GP2BNN_GP_HPP

#include <cmath>
#include <string>
#include <vector>

#include "gp2bnn/errors.hpp"
#include "gp2bnn/linalg.hpp"
#include "gp2bnn/rng.hpp"

namespace gp2bnn {

enum class KernelFamily { RBF, Matern12, Matern32, Matern52, Periodic, RBF_ARD };

struct KernelSpec {
  KernelFamily family = KernelFamily::RBF;
  double amplitude = 1.0;
  double lengthscale = 1.0;
  std::vector<double> ard_lengthscales;  // RBF_ARD only, one per input dim
  double period = 1.0;                   // Periodic only

  void validate(std::size_t input_dim) const {
    if (!(amplitude > 0.0)) throw BadKernelSpec("kernel: amplitude must be > 0");
    if (family == KernelFamily::RBF_ARD) {
      if (ard_lengthscales.size() != input_dim)
        throw BadKernelSpec("kernel: ARD lengthscale count must match input dim");
      for (double l : ard_lengthscales)
        if (!(l > 0.0)) throw BadKernelSpec("kernel: lengthscales must be > 0");
    } else {
      if (!(lengthscale > 0.0)) throw BadKernelSpec("kernel: lengthscale must be > 0");
    }
    if (family == KernelFamily::Periodic && !(period > 0.0))
      throw BadKernelSpec("kernel: period must be > 0");
  }
};

inline std::string kernel_family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::RBF: return "rbf";
    case KernelFamily::Matern12: return "matern12";
    case KernelFamily::Matern32: return "matern32";
    case KernelFamily::Matern52: return "matern52";
    case KernelFamily::Periodic: return "periodic";
    case KernelFamily::RBF_ARD: return "rbf_ard";
  }
  return "unknown";
}

inline KernelFamily kernel_family_from_name(const std::string& s) {
  if (s == "rbf") return KernelFamily::RBF;
  if (s == "matern12") return KernelFamily::Matern12;
  if (s == "matern32") return KernelFamily::Matern32;
  if (s == "matern52") return KernelFamily::Matern52;
  if (s == "periodic") return KernelFamily::Periodic;
  if (s == "rbf_ard") return KernelFamily::RBF_ARD;
  throw BadKernelSpec("kernel: unknown family '" + s + "'");
}

// Set of evaluation inputs, one point per row.
struct InputSet {
  Matrix points;  // n x d

  std::size_t size() const { return points.rows(); }
  std::size_t dim() const { return points.cols(); }

  void validate() const {
    if (points.rows() == 0 || points.cols() == 0)
      throw DimMismatch("InputSet: need at least one point of dim >= 1");
  }

  static InputSet from_vector(const std::vector<double>& xs) {
    InputSet s;
    s.points = Matrix(xs.size(), 1);
    for (std::size_t i = 0; i < xs.size(); ++i) s.points(i, 0) = xs[i];
    s.validate();
    return s;
  }

  static InputSet linspace(double lo, double hi, std::size_t n) {
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i)
      xs[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return from_vector(xs);
  }

  static InputSet uniform_random(double lo, double hi, std::size_t n, Rng& rng) {
    std::vector<double> xs(n);
    for (auto& x : xs) x = rng.uniform(lo, hi);
    return from_vector(xs);
  }

  static InputSet uniform_random(double lo, double hi, std::size_t n, std::size_t dim,
                                 Rng& rng) {
    InputSet s;
    s.points = Matrix(n, dim);
    for (double& v : s.points.data()) v = rng.uniform(lo, hi);
    s.validate();
    return s;
  }

  InputSet shifted(double delta) const {
    InputSet s = *this;
    for (double& v : s.points.data()) v += delta;
    return s;
  }

  bool same_points(const InputSet& other) const {
    if (size() != other.size() || dim() != other.dim()) return false;
    return points.data() == other.points.data();
  }
};

// A batch of function draws evaluated on a fixed InputSet; one row per draw.
struct FunctionBatch {
  Matrix values;  // n_functions x n_points
  std::string source;  // "gp" or "bnn"

  std::size_t n_functions() const { return values.rows(); }
  std::size_t n_points() const { return values.cols(); }
};

inline double kernel_eval(const KernelSpec& k, const double* x, const double* y,
                          std::size_t dim) {
  const double a2 = k.amplitude * k.amplitude;
  if (k.family == KernelFamily::RBF_ARD) {
    double q = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double z = (x[d] - y[d]) / k.ard_lengthscales[d];
      q += z * z;
    }
    return a2 * std::exp(-0.5 * q);
  }
  double r2 = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    const double z = x[d] - y[d];
    r2 += z * z;
  }
  const double r = std::sqrt(r2);
  const double l = k.lengthscale;
  switch (k.family) {
    case KernelFamily::RBF:
      return a2 * std::exp(-0.5 * r2 / (l * l));
    case KernelFamily::Matern12:
      return a2 * std::exp(-r / l);
    case KernelFamily::Matern32: {
      const double u = 1.7320508075688772 * r / l;
      return a2 * (1.0 + u) * std::exp(-u);
    }
    case KernelFamily::Matern52: {
      const double u = 2.2360679774997896 * r / l;
      return a2 * (1.0 + u + u * u / 3.0) * std::exp(-u);
    }
    case KernelFamily::Periodic: {
      const double s = std::sin(3.1415926535897932384626433832795 * r / k.period);
      return a2 * std::exp(-2.0 * s * s / (l * l));
    }
    default:
      throw BadKernelSpec("kernel_eval: unhandled family");
  }
}

inline double kernel_eval(const KernelSpec& k, const InputSet& xs, std::size_t i,
                          std::size_t j) {
  return kernel_eval(k, xs.points.row(i), xs.points.row(j), xs.dim());
}

inline SymMatrix gram(const KernelSpec& k, const InputSet& xs) {
  xs.validate();
  k.validate(xs.dim());
  const std::size_t n = xs.size();
  SymMatrix g(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      g.set(i, j, kernel_eval(k, xs, i, j));
  return g;
}

// Draws zero-mean GP functions on xs: rows of L z^T with L the (jittered)
// Cholesky factor of the gram matrix.  Same seed, same batch.
inline FunctionBatch sample_gp(const KernelSpec& k, const InputSet& xs,
                               std::size_t n_functions, std::uint64_t seed) {
  const SymMatrix g = gram(k, xs);
  const CholeskyResult ch = cholesky(g);
  const std::size_t n = xs.size();

  FunctionBatch batch;
  batch.source = "gp";
  batch.values = Matrix(n_functions, n);
  Rng rng(derive_seed(seed, 0x67705f73616d70ULL));
  std::vector<double> z(n);
  for (std::size_t s = 0; s < n_functions; ++s) {
    for (auto& zi : z) zi = rng.normal();
    double* out = batch.values.row(s);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      const double* lrow = ch.L.row(i);
      for (std::size_t j = 0; j <= i; ++j) acc += lrow[j] * z[j];
      out[i] = acc;
    }
  }
  return batch;
}

}  // namespace gp2bnn

#endif  // GP2BNN_GP_HPP
