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

#ifndef GP2BNN_LINALG_HPP
#define GP2BNN_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "gp2bnn/errors.hpp"

namespace gp2bnn {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

 private:
  std::size_t rows_, cols_;
  std::vector<double> data_;
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimMismatch("matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.row(k);
      double* crow = c.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

inline std::vector<double> matvec(const Matrix& a, const std::vector<double>& x) {
  if (a.cols() != x.size()) throw DimMismatch("matvec: dimensions differ");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    const double* arow = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) acc += arow[j] * x[j];
    y[i] = acc;
  }
  return y;
}

inline double fro_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

// Square symmetric matrix.  Construction symmetrizes, so (i,j) and (j,i)
// are bitwise equal from then on.
class SymMatrix {
 public:
  explicit SymMatrix(std::size_t dim) : m_(dim, dim) {
    if (dim == 0) throw DimMismatch("SymMatrix: dim must be >= 1");
  }

  explicit SymMatrix(const Matrix& a) : m_(a.rows(), a.rows()) {
    if (a.rows() != a.cols() || a.rows() == 0)
      throw DimMismatch("SymMatrix: need a square matrix of dim >= 1");
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        const double v = 0.5 * (a(i, j) + a(j, i));
        m_(i, j) = v;
        m_(j, i) = v;
      }
  }

  std::size_t dim() const { return m_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

  void set(std::size_t i, std::size_t j, double v) {
    m_(i, j) = v;
    m_(j, i) = v;
  }

  const Matrix& mat() const { return m_; }

  double trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) t += m_(i, i);
    return t;
  }

  double mean_diag() const { return trace() / static_cast<double>(dim()); }

  SymMatrix add_diag(double eps) const {
    SymMatrix out = *this;
    for (std::size_t i = 0; i < dim(); ++i) out.m_(i, i) += eps;
    return out;
  }

 private:
  Matrix m_;
};

inline double fro_norm(const SymMatrix& a) { return fro_norm(a.mat()); }

struct JitterPolicy {
  double initial_scale = 1e-6;  // times mean(diag)
  double growth = 10.0;
  int max_attempts = 4;
};

struct CholeskyResult {
  Matrix L;       // lower triangular
  double jitter;  // accepted diagonal shift: L L^T = A + jitter I
};

namespace detail {

// Plain lower Cholesky of A + eps I; false on a non-positive or non-finite pivot.
inline bool try_cholesky(const SymMatrix& a, double eps, Matrix& L) {
  const std::size_t n = a.dim();
  L = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double acc = a(i, j);
      if (i == j) acc += eps;
      for (std::size_t k = 0; k < j; ++k) acc -= L(i, k) * L(j, k);
      if (i == j) {
        if (!(acc > 0.0) || !std::isfinite(acc)) return false;
        L(i, i) = std::sqrt(acc);
      } else {
        L(i, j) = acc / L(j, j);
      }
    }
  }
  return true;
}

}  // namespace detail

// Cholesky with escalating diagonal jitter.  Tries the matrix as given first,
// then max_attempts jittered tries starting at initial_scale * mean(diag).
inline CholeskyResult cholesky(const SymMatrix& a, const JitterPolicy& policy = {}) {
  Matrix L;
  if (detail::try_cholesky(a, 0.0, L)) return {std::move(L), 0.0};
  double eps = policy.initial_scale * a.mean_diag();
  if (!(eps > 0.0)) eps = policy.initial_scale;
  for (int attempt = 0; attempt < policy.max_attempts; ++attempt) {
    if (detail::try_cholesky(a, eps, L)) return {std::move(L), eps};
    eps *= policy.growth;
  }
  throw NotPositiveDefinite("cholesky: matrix not positive definite after jitter attempts");
}

struct EigResult {
  std::vector<double> values;  // descending
  Matrix vectors;              // column k is the eigenvector for values[k]
};

// Symmetric eigendecomposition by cyclic Jacobi rotations.
inline EigResult sym_eig(const SymMatrix& a) {
  const std::size_t n = a.dim();
  Matrix w = a.mat();
  Matrix v = Matrix::identity(n);

  const double anorm = fro_norm(w);
  const double target = 1e-13 * (anorm > 0.0 ? anorm : 1.0);
  const std::size_t max_sweeps = 100 * n;

  bool converged = (n == 1);
  for (std::size_t sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += 2.0 * w(p, q) * w(p, q);
    if (std::sqrt(off) <= target) {
      converged = true;
      break;
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = w(p, q);
        if (apq == 0.0) continue;
        const double theta = 0.5 * std::atan2(2.0 * apq, w(q, q) - w(p, p));
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        for (std::size_t k = 0; k < n; ++k) {
          const double wkp = w(k, p);
          const double wkq = w(k, q);
          w(k, p) = c * wkp - s * wkq;
          w(k, q) = s * wkp + c * wkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double wpk = w(p, k);
          const double wqk = w(q, k);
          w(p, k) = c * wpk - s * wqk;
          w(q, k) = s * wpk + c * wqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += 2.0 * w(p, q) * w(p, q);
    if (std::sqrt(off) > target)
      throw NoConvergence("sym_eig: Jacobi sweep limit reached");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return w(i, i) > w(j, j); });

  EigResult out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = w(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

// Symmetric PSD square root via eigendecomposition.  Eigenvalues slightly
// below zero (numerical noise) are clamped; genuinely negative ones raise.
inline SymMatrix sqrtm_psd(const SymMatrix& a) {
  const EigResult eig = sym_eig(a);
  const double tol = 1e-8 * fro_norm(a);
  const std::size_t n = a.dim();
  std::vector<double> sq(n);
  for (std::size_t k = 0; k < n; ++k) {
    double lam = eig.values[k];
    if (lam < 0.0) {
      if (lam < -tol) throw NotPSD("sqrtm_psd: eigenvalue below the PSD tolerance");
      lam = 0.0;
    }
    sq[k] = std::sqrt(lam);
  }
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        acc += eig.vectors(i, k) * sq[k] * eig.vectors(j, k);
      s(i, j) = acc;
      s(j, i) = acc;
    }
  return SymMatrix(s);
}

inline Matrix sym_mul(const SymMatrix& a, const SymMatrix& b) {
  return matmul(a.mat(), b.mat());
}

// Tr((S2 A S2)^{1/2}) with S2 = B^{1/2}, i.e. the sum of square roots of the
// eigenvalues of A B.  Computed from one PSD square root plus one symmetric
// eigendecomposition; small negative eigenvalues are clamped to zero.
inline double trace_sqrt_product(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim()) throw DimMismatch("trace_sqrt_product: dims differ");
  const SymMatrix sb = sqrtm_psd(b);
  const Matrix c = matmul(matmul(sb.mat(), a.mat()), sb.mat());
  const EigResult eig = sym_eig(SymMatrix(c));
  double t = 0.0;
  for (double lam : eig.values) t += std::sqrt(std::max(lam, 0.0));
  return t;
}

}  // namespace gp2bnn

#endif  // GP2BNN_LINALG_HPP
