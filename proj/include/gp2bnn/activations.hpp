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

#ifndef GP2BNN_ACTIVATIONS_HPP
#define GP2BNN_ACTIVATIONS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "gp2bnn/errors.hpp"
#include "gp2bnn/rng.hpp"

namespace gp2bnn {

enum class ActKind { Fixed, NNAct, Rational, PiecewiseLinear, PeriodicFourier };

enum class FixedFn { ReLU, TanH, SiLU, RBFunit, Erf, Identity };

// inner nonlinearity of NNAct
enum class InnerFn { ReLU, TanH, SiLU };

namespace detail {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr int kMaxNNWidth = 64;
constexpr int kMaxNNDepth = 4;
constexpr int kMaxBreaks = 64;
constexpr int kMaxDegree = 16;
constexpr int kMaxFreqs = 64;
constexpr double kMinSegment = 1e-8;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double inner_eval(InnerFn f, double z) {
  switch (f) {
    case InnerFn::ReLU: return z > 0.0 ? z : 0.0;
    case InnerFn::TanH: return std::tanh(z);
    case InnerFn::SiLU: return z * sigmoid(z);
  }
  return 0.0;
}

inline double inner_grad(InnerFn f, double z) {
  switch (f) {
    case InnerFn::ReLU: return z > 0.0 ? 1.0 : 0.0;
    case InnerFn::TanH: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case InnerFn::SiLU: {
      const double s = sigmoid(z);
      return s + z * s * (1.0 - s);
    }
  }
  return 0.0;
}
}  // namespace detail

// A scalar activation function, possibly with trainable parameters eta.
//
// Parameter layouts:
//   NNAct          per layer l = 1..D+1: W_l row-major (s_l x s_{l-1}), then b_l
//   Rational       numerator coefficients a_0..a_p, then denominator b_1..b_q,
//                  phi(x) = P(x) / (1 + |sum_j b_j x^j|)
//   PiecewiseLinear  breakpoints b_1..b_n, values y_1..y_n, then the two tail
//                  slopes s_left, s_right; linear interpolation in between
//   PeriodicFourier  psi_cos (K), psi_sin (K), A_cos (K), A_sin (K),
//                  phi(x) = sum_i A_cos_i cos(2 pi psi_cos_i x)
//                         + sum_j A_sin_j sin(2 pi psi_sin_j x)
struct ActivationModel {
  ActKind kind = ActKind::Fixed;
  FixedFn fixed = FixedFn::ReLU;
  std::vector<int> widths;  // NNAct hidden widths
  InnerFn inner = InnerFn::SiLU;
  int deg_num = 0;
  int deg_den = 0;
  int n_break = 0;
  int n_freq = 0;
  std::vector<double> eta;
  std::string spec_string;

  bool trainable() const { return kind != ActKind::Fixed; }

  std::size_t param_count() const {
    switch (kind) {
      case ActKind::Fixed:
        return 0;
      case ActKind::NNAct: {
        std::size_t n = 0, prev = 1;
        for (int w : widths) {
          n += (prev + 1) * static_cast<std::size_t>(w);
          prev = static_cast<std::size_t>(w);
        }
        return n + prev + 1;
      }
      case ActKind::Rational:
        return static_cast<std::size_t>(deg_num + 1 + deg_den);
      case ActKind::PiecewiseLinear:
        return static_cast<std::size_t>(2 * n_break + 2);
      case ActKind::PeriodicFourier:
        return static_cast<std::size_t>(4 * n_freq);
    }
    return 0;
  }

  void validate() const {
    if (kind == ActKind::NNAct) {
      if (widths.empty() || widths.size() > detail::kMaxNNDepth)
        throw BadActivationSpec("nn activation: 1 to 4 hidden layers supported");
      for (int w : widths)
        if (w < 1 || w > detail::kMaxNNWidth)
          throw BadActivationSpec("nn activation: hidden width out of range");
    }
    if (kind == ActKind::Rational &&
        (deg_num < 1 || deg_num > detail::kMaxDegree || deg_den < 1 ||
         deg_den > detail::kMaxDegree))
      throw BadActivationSpec("rational activation: degrees out of range");
    if (kind == ActKind::PiecewiseLinear && (n_break < 2 || n_break > detail::kMaxBreaks))
      throw BadActivationSpec("piecewise activation: need 2 to 64 breakpoints");
    if (kind == ActKind::PeriodicFourier && (n_freq < 1 || n_freq > detail::kMaxFreqs))
      throw BadActivationSpec("fourier activation: need 1 to 64 frequencies");
    if (eta.size() != param_count())
      throw BadActivationSpec("activation: parameter vector has wrong length");
  }
};

namespace detail {

struct NNScratch {
  // activations a[l] and pre-activations z[l] for each layer
  std::array<std::array<double, kMaxNNWidth>, kMaxNNDepth + 2> a;
  std::array<std::array<double, kMaxNNWidth>, kMaxNNDepth + 2> z;
  std::array<std::array<double, kMaxNNWidth>, kMaxNNDepth + 2> delta;
};

// forward pass; returns output, fills scratch
inline double nn_forward(const ActivationModel& m, double x, NNScratch& s) {
  const std::size_t depth = m.widths.size();
  s.a[0][0] = x;
  std::size_t prev = 1;
  std::size_t off = 0;
  for (std::size_t l = 0; l < depth; ++l) {
    const std::size_t w = static_cast<std::size_t>(m.widths[l]);
    const double* W = m.eta.data() + off;
    const double* b = W + w * prev;
    for (std::size_t i = 0; i < w; ++i) {
      double acc = b[i];
      for (std::size_t j = 0; j < prev; ++j) acc += W[i * prev + j] * s.a[l][j];
      s.z[l + 1][i] = acc;
      s.a[l + 1][i] = inner_eval(m.inner, acc);
    }
    off += (prev + 1) * w;
    prev = w;
  }
  const double* W = m.eta.data() + off;
  const double* b = W + prev;
  double acc = b[0];
  for (std::size_t j = 0; j < prev; ++j) acc += W[j] * s.a[depth][j];
  return acc;
}

// backward pass for d(output)/dx; also leaves delta[l] (gradients at z)
inline double nn_backward_dx(const ActivationModel& m, NNScratch& s) {
  const std::size_t depth = m.widths.size();
  std::vector<std::size_t> offs(depth + 1);
  std::size_t prev = 1, off = 0;
  for (std::size_t l = 0; l < depth; ++l) {
    offs[l] = off;
    off += (prev + 1) * static_cast<std::size_t>(m.widths[l]);
    prev = static_cast<std::size_t>(m.widths[l]);
  }
  offs[depth] = off;

  // output layer feeds delta of the last hidden layer
  const double* Wout = m.eta.data() + offs[depth];
  for (std::size_t i = 0; i < prev; ++i)
    s.delta[depth][i] = Wout[i] * inner_grad(m.inner, s.z[depth][i]);
  for (std::size_t l = depth; l-- > 1;) {
    const std::size_t w = static_cast<std::size_t>(m.widths[l]);
    const std::size_t wp = static_cast<std::size_t>(m.widths[l - 1]);
    const double* W = m.eta.data() + offs[l];
    for (std::size_t j = 0; j < wp; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < w; ++i) acc += W[i * wp + j] * s.delta[l + 1][i];
      s.delta[l][j] = acc * inner_grad(m.inner, s.z[l][j]);
    }
  }
  const std::size_t w1 = static_cast<std::size_t>(m.widths[0]);
  const double* W1 = m.eta.data();
  double dx = 0.0;
  for (std::size_t i = 0; i < w1; ++i) dx += W1[i] * s.delta[1][i];
  return dx;
}

// full parameter gradient, using delta[] prepared by nn_backward_dx
inline void nn_param_grad(const ActivationModel& m, const NNScratch& s, double* deta) {
  const std::size_t depth = m.widths.size();
  std::size_t prev = 1, off = 0;
  for (std::size_t l = 0; l < depth; ++l) {
    const std::size_t w = static_cast<std::size_t>(m.widths[l]);
    for (std::size_t i = 0; i < w; ++i) {
      for (std::size_t j = 0; j < prev; ++j)
        deta[off + i * prev + j] = s.delta[l + 1][i] * s.a[l][j];
      deta[off + w * prev + i] = s.delta[l + 1][i];
    }
    off += (prev + 1) * w;
    prev = w;
  }
  for (std::size_t j = 0; j < prev; ++j) deta[off + j] = s.a[depth][j];
  deta[off + prev] = 1.0;
}

struct PwlSegment {
  // resolved location of x among the sorted breakpoints
  int mode;  // 0 left tail, 1 interior, 2 right tail
  std::size_t lo, hi;  // original indices of the bracketing breakpoints
  double t;            // interpolation weight toward hi
  double seg;          // clamped segment length
};

inline PwlSegment pwl_locate(const ActivationModel& m, double x,
                             std::array<std::size_t, kMaxBreaks>& order) {
  const std::size_t n = static_cast<std::size_t>(m.n_break);
  const double* b = m.eta.data();
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.begin() + n,
            [&](std::size_t i, std::size_t j) { return b[i] < b[j]; });
  PwlSegment seg{};
  if (x <= b[order[0]]) {
    seg.mode = 0;
    seg.lo = order[0];
    return seg;
  }
  if (x >= b[order[n - 1]]) {
    seg.mode = 2;
    seg.lo = order[n - 1];
    return seg;
  }
  std::size_t k = 0;
  while (k + 1 < n && b[order[k + 1]] < x) ++k;
  seg.mode = 1;
  seg.lo = order[k];
  seg.hi = order[k + 1];
  seg.seg = std::max(b[seg.hi] - b[seg.lo], kMinSegment);
  seg.t = (x - b[seg.lo]) / seg.seg;
  return seg;
}

}  // namespace detail

// Evaluate the activation; total for any finite input and parameters.
inline double act_eval(const ActivationModel& m, double x) {
  switch (m.kind) {
    case ActKind::Fixed:
      switch (m.fixed) {
        case FixedFn::ReLU: return x > 0.0 ? x : 0.0;
        case FixedFn::TanH: return std::tanh(x);
        case FixedFn::SiLU: return x * detail::sigmoid(x);
        case FixedFn::RBFunit: return std::exp(-x * x);
        case FixedFn::Erf: return std::erf(x);
        case FixedFn::Identity: return x;
      }
      return 0.0;
    case ActKind::NNAct: {
      detail::NNScratch s;
      return detail::nn_forward(m, x, s);
    }
    case ActKind::Rational: {
      const double* a = m.eta.data();
      const double* b = a + m.deg_num + 1;
      double p = 0.0;
      for (int i = m.deg_num; i >= 0; --i) p = p * x + a[i];
      double q = 0.0;
      for (int j = m.deg_den; j >= 1; --j) q = q * x + b[j - 1];
      q *= x;
      return p / (1.0 + std::abs(q));
    }
    case ActKind::PiecewiseLinear: {
      std::array<std::size_t, detail::kMaxBreaks> order{};
      const detail::PwlSegment seg = detail::pwl_locate(m, x, order);
      const std::size_t n = static_cast<std::size_t>(m.n_break);
      const double* b = m.eta.data();
      const double* y = b + n;
      const double s_left = m.eta[2 * n];
      const double s_right = m.eta[2 * n + 1];
      if (seg.mode == 0) return y[seg.lo] + s_left * (x - b[seg.lo]);
      if (seg.mode == 2) return y[seg.lo] + s_right * (x - b[seg.lo]);
      return (1.0 - seg.t) * y[seg.lo] + seg.t * y[seg.hi];
    }
    case ActKind::PeriodicFourier: {
      const std::size_t k = static_cast<std::size_t>(m.n_freq);
      const double* psi_c = m.eta.data();
      const double* psi_s = psi_c + k;
      const double* a_c = psi_s + k;
      const double* a_s = a_c + k;
      double acc = 0.0;
      for (std::size_t i = 0; i < k; ++i) acc += a_c[i] * std::cos(detail::kTwoPi * psi_c[i] * x);
      for (std::size_t i = 0; i < k; ++i) acc += a_s[i] * std::sin(detail::kTwoPi * psi_s[i] * x);
      return acc;
    }
  }
  return 0.0;
}

// Value and input derivative in one pass (hot path).
struct ActEval {
  double value;
  double dx;
};

inline ActEval act_eval_dx(const ActivationModel& m, double x) {
  switch (m.kind) {
    case ActKind::Fixed:
      switch (m.fixed) {
        case FixedFn::ReLU: return x > 0.0 ? ActEval{x, 1.0} : ActEval{0.0, 0.0};
        case FixedFn::TanH: {
          const double t = std::tanh(x);
          return {t, 1.0 - t * t};
        }
        case FixedFn::SiLU: {
          const double s = detail::sigmoid(x);
          return {x * s, s + x * s * (1.0 - s)};
        }
        case FixedFn::RBFunit: {
          const double e = std::exp(-x * x);
          return {e, -2.0 * x * e};
        }
        case FixedFn::Erf:
          return {std::erf(x), 1.1283791670955126 * std::exp(-x * x)};
        case FixedFn::Identity:
          return {x, 1.0};
      }
      return {0.0, 0.0};
    case ActKind::NNAct: {
      detail::NNScratch s;
      const double v = detail::nn_forward(m, x, s);
      return {v, detail::nn_backward_dx(m, s)};
    }
    case ActKind::Rational: {
      const double* a = m.eta.data();
      const double* b = a + m.deg_num + 1;
      double p = 0.0, dp = 0.0;
      for (int i = m.deg_num; i >= 0; --i) {
        dp = dp * x + p;
        p = p * x + a[i];
      }
      double q = 0.0, dq = 0.0;
      for (int j = m.deg_den; j >= 1; --j) {
        dq = dq * x + q;
        q = q * x + b[j - 1];
      }
      dq = dq * x + q;
      q *= x;
      const double den = 1.0 + std::abs(q);
      const double sgn = q > 0.0 ? 1.0 : (q < 0.0 ? -1.0 : 0.0);
      return {p / den, dp / den - p * sgn * dq / (den * den)};
    }
    case ActKind::PiecewiseLinear: {
      std::array<std::size_t, detail::kMaxBreaks> order{};
      const detail::PwlSegment seg = detail::pwl_locate(m, x, order);
      const std::size_t n = static_cast<std::size_t>(m.n_break);
      const double* b = m.eta.data();
      const double* y = b + n;
      const double s_left = m.eta[2 * n];
      const double s_right = m.eta[2 * n + 1];
      if (seg.mode == 0) return {y[seg.lo] + s_left * (x - b[seg.lo]), s_left};
      if (seg.mode == 2) return {y[seg.lo] + s_right * (x - b[seg.lo]), s_right};
      return {(1.0 - seg.t) * y[seg.lo] + seg.t * y[seg.hi],
              (y[seg.hi] - y[seg.lo]) / seg.seg};
    }
    case ActKind::PeriodicFourier: {
      const std::size_t k = static_cast<std::size_t>(m.n_freq);
      const double* psi_c = m.eta.data();
      const double* psi_s = psi_c + k;
      const double* a_c = psi_s + k;
      const double* a_s = a_c + k;
      double v = 0.0, dx = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const double w = detail::kTwoPi * psi_c[i];
        v += a_c[i] * std::cos(w * x);
        dx -= a_c[i] * w * std::sin(w * x);
      }
      for (std::size_t i = 0; i < k; ++i) {
        const double w = detail::kTwoPi * psi_s[i];
        v += a_s[i] * std::sin(w * x);
        dx += a_s[i] * w * std::cos(w * x);
      }
      return {v, dx};
    }
  }
  return {0.0, 0.0};
}

// Input derivative plus full parameter gradient, written into deta
// (length param_count, caller-owned).  Returns d(phi)/dx.
inline double act_grad_into(const ActivationModel& m, double x, double* deta) {
  switch (m.kind) {
    case ActKind::Fixed:
      return act_eval_dx(m, x).dx;
    case ActKind::NNAct: {
      detail::NNScratch s;
      detail::nn_forward(m, x, s);
      const double dx = detail::nn_backward_dx(m, s);
      detail::nn_param_grad(m, s, deta);
      return dx;
    }
    case ActKind::Rational: {
      const double* a = m.eta.data();
      const double* b = a + m.deg_num + 1;
      double p = 0.0, dp = 0.0;
      for (int i = m.deg_num; i >= 0; --i) {
        dp = dp * x + p;
        p = p * x + a[i];
      }
      double q = 0.0, dq = 0.0;
      for (int j = m.deg_den; j >= 1; --j) {
        dq = dq * x + q;
        q = q * x + b[j - 1];
      }
      dq = dq * x + q;
      q *= x;
      const double den = 1.0 + std::abs(q);
      const double sgn = q > 0.0 ? 1.0 : (q < 0.0 ? -1.0 : 0.0);
      double xi = 1.0;
      for (int i = 0; i <= m.deg_num; ++i) {
        deta[i] = xi / den;
        xi *= x;
      }
      xi = x;
      const double common = -p * sgn / (den * den);
      for (int j = 1; j <= m.deg_den; ++j) {
        deta[m.deg_num + j] = common * xi;
        xi *= x;
      }
      return dp / den - p * sgn * dq / (den * den);
    }
    case ActKind::PiecewiseLinear: {
      std::array<std::size_t, detail::kMaxBreaks> order{};
      const detail::PwlSegment seg = detail::pwl_locate(m, x, order);
      const std::size_t n = static_cast<std::size_t>(m.n_break);
      const double* b = m.eta.data();
      const double* y = b + n;
      std::fill(deta, deta + 2 * n + 2, 0.0);
      if (seg.mode == 0) {
        const double s_left = m.eta[2 * n];
        deta[seg.lo] = -s_left;
        deta[n + seg.lo] = 1.0;
        deta[2 * n] = x - b[seg.lo];
        return s_left;
      }
      if (seg.mode == 2) {
        const double s_right = m.eta[2 * n + 1];
        deta[seg.lo] = -s_right;
        deta[n + seg.lo] = 1.0;
        deta[2 * n + 1] = x - b[seg.lo];
        return s_right;
      }
      const double dy = y[seg.hi] - y[seg.lo];
      deta[n + seg.lo] = 1.0 - seg.t;
      deta[n + seg.hi] = seg.t;
      // dt/db_lo = (x - b_hi) / seg^2, dt/db_hi = -(x - b_lo) / seg^2
      deta[seg.lo] = dy * (x - b[seg.hi]) / (seg.seg * seg.seg);
      deta[seg.hi] = dy * -(x - b[seg.lo]) / (seg.seg * seg.seg);
      return dy / seg.seg;
    }
    case ActKind::PeriodicFourier: {
      const std::size_t k = static_cast<std::size_t>(m.n_freq);
      const double* psi_c = m.eta.data();
      const double* psi_s = psi_c + k;
      const double* a_c = psi_s + k;
      const double* a_s = a_c + k;
      double dx = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const double w = detail::kTwoPi * psi_c[i];
        const double c = std::cos(w * x);
        const double s = std::sin(w * x);
        deta[i] = -a_c[i] * detail::kTwoPi * x * s;  // d/dpsi_c
        deta[2 * k + i] = c;                         // d/dA_c
        dx -= a_c[i] * w * s;
      }
      for (std::size_t i = 0; i < k; ++i) {
        const double w = detail::kTwoPi * psi_s[i];
        const double c = std::cos(w * x);
        const double s = std::sin(w * x);
        deta[k + i] = a_s[i] * detail::kTwoPi * x * c;  // d/dpsi_s
        deta[3 * k + i] = s;                            // d/dA_s
        dx += a_s[i] * w * c;
      }
      return dx;
    }
  }
  return 0.0;
}

struct ActGrad {
  double dx;
  std::vector<double> deta;
};

inline ActGrad act_grad(const ActivationModel& m, double x) {
  ActGrad g;
  g.deta.resize(m.param_count());
  g.dx = act_grad_into(m, x, g.deta.data());
  return g;
}

// Value, input derivative and parameter gradient in a single pass; shares
// the transcendental evaluations between the three outputs.
inline double act_eval_full(const ActivationModel& m, double x, double& dx,
                            double* deta) {
  switch (m.kind) {
    case ActKind::Fixed: {
      const ActEval e = act_eval_dx(m, x);
      dx = e.dx;
      return e.value;
    }
    case ActKind::NNAct: {
      detail::NNScratch s;
      const double v = detail::nn_forward(m, x, s);
      dx = detail::nn_backward_dx(m, s);
      detail::nn_param_grad(m, s, deta);
      return v;
    }
    case ActKind::PeriodicFourier: {
      const std::size_t k = static_cast<std::size_t>(m.n_freq);
      const double* psi_c = m.eta.data();
      const double* psi_s = psi_c + k;
      const double* a_c = psi_s + k;
      const double* a_s = a_c + k;
      double v = 0.0;
      dx = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const double w = detail::kTwoPi * psi_c[i];
        const double c = std::cos(w * x);
        const double s = std::sin(w * x);
        v += a_c[i] * c;
        dx -= a_c[i] * w * s;
        deta[i] = -a_c[i] * detail::kTwoPi * x * s;
        deta[2 * k + i] = c;
      }
      for (std::size_t i = 0; i < k; ++i) {
        const double w = detail::kTwoPi * psi_s[i];
        const double c = std::cos(w * x);
        const double s = std::sin(w * x);
        v += a_s[i] * s;
        dx += a_s[i] * w * c;
        deta[k + i] = a_s[i] * detail::kTwoPi * x * c;
        deta[3 * k + i] = s;
      }
      return v;
    }
    default: {
      dx = act_grad_into(m, x, deta);
      return act_eval(m, x);
    }
  }
}

// Seeded parameter initialization for each trainable kind.
inline void init_activation_params(ActivationModel& m, Rng& rng) {
  m.eta.assign(m.param_count(), 0.0);
  switch (m.kind) {
    case ActKind::Fixed:
      break;
    case ActKind::NNAct: {
      std::size_t prev = 1, off = 0;
      std::vector<int> sizes = m.widths;
      sizes.push_back(1);
      for (int wi : sizes) {
        const std::size_t w = static_cast<std::size_t>(wi);
        const double scale = 1.0 / std::sqrt(static_cast<double>(prev));
        for (std::size_t i = 0; i < w * prev; ++i) m.eta[off + i] = scale * rng.normal();
        off += (prev + 1) * w;  // biases stay zero
        prev = w;
      }
      break;
    }
    case ActKind::Rational: {
      // near identity: numerator ~ x, denominator ~ 1
      for (int i = 0; i <= m.deg_num; ++i) m.eta[i] = 0.01 * rng.normal();
      m.eta[1] += 1.0;
      for (int j = 0; j < m.deg_den; ++j) m.eta[m.deg_num + 1 + j] = 0.01 * rng.normal();
      break;
    }
    case ActKind::PiecewiseLinear: {
      const int n = m.n_break;
      for (int i = 0; i < n; ++i) {
        const double b = -2.5 + 5.0 * static_cast<double>(i) / static_cast<double>(n - 1);
        m.eta[i] = b;
        m.eta[n + i] = b + 0.05 * rng.normal();
      }
      m.eta[2 * n] = 1.0 + 0.05 * rng.normal();
      m.eta[2 * n + 1] = 1.0 + 0.05 * rng.normal();
      break;
    }
    case ActKind::PeriodicFourier: {
      const int k = m.n_freq;
      const double amp_sd = 1.0 / std::sqrt(2.0 * static_cast<double>(k));
      for (int i = 0; i < 2 * k; ++i) m.eta[i] = rng.log_uniform(0.05, 2.0);
      for (int i = 0; i < 2 * k; ++i) m.eta[2 * k + i] = amp_sd * rng.normal();
      break;
    }
  }
}

// Parses an activation spec string:
//   relu | tanh | silu | rbf | erf | identity
//   nn:<w1>[:<w2>...]:<relu|tanh|silu>
//   rational:<p>:<q>
//   pwl:<n>
//   fourier:<K>
inline ActivationModel make_activation(const std::string& spec, Rng& rng) {
  ActivationModel m;
  m.spec_string = spec;
  std::vector<std::string> parts;
  {
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ':')) parts.push_back(tok);
  }
  if (parts.empty()) throw BadActivationSpec("activation: empty spec");
  const std::string& head = parts[0];
  auto want = [&](std::size_t n) {
    if (parts.size() != n)
      throw BadActivationSpec("activation: malformed spec '" + spec + "'");
  };
  auto to_int = [&](const std::string& s) {
    try {
      std::size_t pos = 0;
      const int v = std::stoi(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw BadActivationSpec("activation: bad integer in spec '" + spec + "'");
    }
  };

  if (head == "relu" || head == "tanh" || head == "silu" || head == "rbf" ||
      head == "erf" || head == "identity") {
    want(1);
    m.kind = ActKind::Fixed;
    if (head == "relu") m.fixed = FixedFn::ReLU;
    else if (head == "tanh") m.fixed = FixedFn::TanH;
    else if (head == "silu") m.fixed = FixedFn::SiLU;
    else if (head == "rbf") m.fixed = FixedFn::RBFunit;
    else if (head == "erf") m.fixed = FixedFn::Erf;
    else m.fixed = FixedFn::Identity;
  } else if (head == "nn") {
    if (parts.size() < 3) throw BadActivationSpec("activation: nn needs widths and inner fn");
    m.kind = ActKind::NNAct;
    for (std::size_t i = 1; i + 1 < parts.size(); ++i) m.widths.push_back(to_int(parts[i]));
    const std::string& in = parts.back();
    if (in == "relu") m.inner = InnerFn::ReLU;
    else if (in == "tanh") m.inner = InnerFn::TanH;
    else if (in == "silu") m.inner = InnerFn::SiLU;
    else throw BadActivationSpec("activation: unknown inner fn '" + in + "'");
  } else if (head == "rational") {
    want(3);
    m.kind = ActKind::Rational;
    m.deg_num = to_int(parts[1]);
    m.deg_den = to_int(parts[2]);
  } else if (head == "pwl") {
    want(2);
    m.kind = ActKind::PiecewiseLinear;
    m.n_break = to_int(parts[1]);
  } else if (head == "fourier") {
    want(2);
    m.kind = ActKind::PeriodicFourier;
    m.n_freq = to_int(parts[1]);
  } else {
    throw BadActivationSpec("activation: unknown kind '" + head + "'");
  }
  init_activation_params(m, rng);
  m.validate();
  return m;
}

}  // namespace gp2bnn

#endif  // GP2BNN_ACTIVATIONS_HPP
