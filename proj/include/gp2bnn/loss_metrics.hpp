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

#ifndef GP2BNN_LOSS_METRICS_HPP
#define GP2BNN_LOSS_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "gp2bnn/errors.hpp"
#include "gp2bnn/gp.hpp"
#include "gp2bnn/linalg.hpp"

namespace gp2bnn {

struct MomentSummary {
  std::vector<double> mean;
  SymMatrix covariance;
  std::size_t n_samples;
};

// Sample mean and covariance (n-1 divisor) of a function batch.
inline MomentSummary moments(const FunctionBatch& batch) {
  const std::size_t n = batch.n_functions();
  const std::size_t d = batch.n_points();
  if (n < 2) throw TooFewSamples("moments: need at least 2 function draws");
  std::vector<double> mean(d, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const double* row = batch.values.row(s);
    for (std::size_t i = 0; i < d; ++i) mean[i] += row[i];
  }
  for (auto& m : mean) m /= static_cast<double>(n);

  Matrix cov(d, d);
  std::vector<double> centered(d);
  for (std::size_t s = 0; s < n; ++s) {
    const double* row = batch.values.row(s);
    for (std::size_t i = 0; i < d; ++i) centered[i] = row[i] - mean[i];
    for (std::size_t i = 0; i < d; ++i) {
      const double ci = centered[i];
      double* crow = cov.row(i);
      for (std::size_t j = 0; j <= i; ++j) crow[j] += ci * centered[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      cov(i, j) *= inv;
      cov(j, i) = cov(i, j);
    }
  return {std::move(mean), SymMatrix(cov), n};
}

// Squared 2-Wasserstein distance between two Gaussians:
//   |mu1 - mu2|^2 + Tr(S1 + S2 - 2 (S2^{1/2} S1 S2^{1/2})^{1/2})
// Slightly negative results from rounding are clamped to zero.  With
// normalize set, the result is divided by the dimension.
inline double w2_gaussian(const MomentSummary& a, const MomentSummary& b,
                          bool normalize = true) {
  const std::size_t d = a.mean.size();
  if (d != b.mean.size() || a.covariance.dim() != d || b.covariance.dim() != d)
    throw DimMismatch("w2_gaussian: summaries have different dimensions");
  double mu = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = a.mean[i] - b.mean[i];
    mu += diff * diff;
  }
  const double tr = a.covariance.trace() + b.covariance.trace() -
                    2.0 * trace_sqrt_product(a.covariance, b.covariance);
  double w2 = mu + tr;
  if (w2 < 0.0) w2 = 0.0;
  if (normalize) w2 /= static_cast<double>(d);
  return w2;
}

namespace detail {

struct PooledMoments {
  double mean, var, skew, kurt;  // var population, skew m3/m2^1.5, kurt m4/m2^2
};

inline PooledMoments pooled_moments(const FunctionBatch& batch) {
  const std::size_t total = batch.values.data().size();
  if (total < 2) throw TooFewSamples("pooled moments: need at least 2 values");
  double m1 = 0.0;
  for (double v : batch.values.data()) m1 += v;
  m1 /= static_cast<double>(total);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : batch.values.data()) {
    const double d = v - m1;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= static_cast<double>(total);
  m3 /= static_cast<double>(total);
  m4 /= static_cast<double>(total);
  if (!(m2 > 0.0)) throw DegenerateBatch("pooled moments: batch has zero variance");
  return {m1, m2, m3 / std::pow(m2, 1.5), m4 / (m2 * m2)};
}

}  // namespace detail

// Squared gaps of pooled variance, kurtosis and skewness between two batches.
inline double moment_regularizer(const FunctionBatch& a, const FunctionBatch& b) {
  const detail::PooledMoments pa = detail::pooled_moments(a);
  const detail::PooledMoments pb = detail::pooled_moments(b);
  const double dv = pa.var - pb.var;
  const double dk = pa.kurt - pb.kurt;
  const double ds = pa.skew - pb.skew;
  return dv * dv + dk * dk + ds * ds;
}

namespace detail {

inline std::vector<double> sorted_column(const FunctionBatch& b, std::size_t col) {
  std::vector<double> v(b.n_functions());
  for (std::size_t s = 0; s < v.size(); ++s) v[s] = b.values(s, col);
  std::sort(v.begin(), v.end());
  return v;
}

// quantile subsample of a sorted vector down to m entries
inline std::vector<double> quantile_subsample(const std::vector<double>& sorted,
                                              std::size_t m) {
  if (sorted.size() == m) return sorted;
  std::vector<double> out(m);
  for (std::size_t j = 0; j < m; ++j) {
    std::size_t idx = static_cast<std::size_t>(
        (static_cast<double>(j) + 0.5) * static_cast<double>(sorted.size()) /
        static_cast<double>(m));
    if (idx >= sorted.size()) idx = sorted.size() - 1;
    out[j] = sorted[idx];
  }
  return out;
}

inline double median_sorted(const std::vector<double>& v) {
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

// Average over input points of the 1-D Wasserstein-1 distance between the
// marginal samples (sorted-value matching; the larger batch is reduced to the
// smaller one by deterministic quantile subsampling).
inline double empirical_w1(const FunctionBatch& a, const FunctionBatch& b) {
  if (a.n_points() != b.n_points())
    throw InputSetMismatch("empirical_w1: batches evaluated on different input sets");
  if (a.n_functions() < 2 || b.n_functions() < 2)
    throw TooFewSamples("empirical_w1: need at least 2 draws per batch");
  const std::size_t m = std::min(a.n_functions(), b.n_functions());
  double total = 0.0;
  for (std::size_t i = 0; i < a.n_points(); ++i) {
    const std::vector<double> qa =
        detail::quantile_subsample(detail::sorted_column(a, i), m);
    const std::vector<double> qb =
        detail::quantile_subsample(detail::sorted_column(b, i), m);
    double w1 = 0.0;
    for (std::size_t k = 0; k < m; ++k) w1 += std::abs(qa[k] - qb[k]);
    total += w1 / static_cast<double>(m);
  }
  return total / static_cast<double>(a.n_points());
}

enum class MmdKernel { Linear, Polynomial, RBF };

struct MmdResult {
  double value;      // unbiased MMD^2 estimate, may be negative
  double bandwidth;  // RBF only: median pairwise distance, else 0
};

// Unbiased (U-statistic) squared maximum mean discrepancy between two batches
// of function vectors.  Kernels: linear x.y, polynomial (x.y/d + 1)^3, and
// RBF exp(-|x-y|^2 / (2 h^2)) with h the median pairwise distance over the
// pooled sample.
inline MmdResult mmd(const FunctionBatch& a, const FunctionBatch& b, MmdKernel kind) {
  if (a.n_points() != b.n_points())
    throw InputSetMismatch("mmd: batches evaluated on different input sets");
  const std::size_t m = a.n_functions();
  const std::size_t n = b.n_functions();
  if (m < 2 || n < 2) throw TooFewSamples("mmd: need at least 2 draws per batch");
  const std::size_t d = a.n_points();

  double bandwidth = 0.0;
  if (kind == MmdKernel::RBF) {
    std::vector<const double*> pooled;
    pooled.reserve(m + n);
    for (std::size_t i = 0; i < m; ++i) pooled.push_back(a.values.row(i));
    for (std::size_t i = 0; i < n; ++i) pooled.push_back(b.values.row(i));
    std::vector<double> dists;
    dists.reserve(pooled.size() * (pooled.size() - 1) / 2);
    for (std::size_t i = 0; i < pooled.size(); ++i)
      for (std::size_t j = i + 1; j < pooled.size(); ++j) {
        double r2 = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          const double diff = pooled[i][k] - pooled[j][k];
          r2 += diff * diff;
        }
        dists.push_back(std::sqrt(r2));
      }
    const std::size_t mid = dists.size() / 2;
    std::nth_element(dists.begin(), dists.begin() + mid, dists.end());
    bandwidth = dists[mid];
    if (!(bandwidth > 0.0)) bandwidth = 1.0;
  }

  auto kernel = [&](const double* x, const double* y) {
    switch (kind) {
      case MmdKernel::Linear: {
        double dot = 0.0;
        for (std::size_t k = 0; k < d; ++k) dot += x[k] * y[k];
        return dot;
      }
      case MmdKernel::Polynomial: {
        double dot = 0.0;
        for (std::size_t k = 0; k < d; ++k) dot += x[k] * y[k];
        const double u = dot / static_cast<double>(d) + 1.0;
        return u * u * u;
      }
      case MmdKernel::RBF: {
        double r2 = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          const double diff = x[k] - y[k];
          r2 += diff * diff;
        }
        return std::exp(-r2 / (2.0 * bandwidth * bandwidth));
      }
    }
    return 0.0;
  };

  double within_a = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      within_a += kernel(a.values.row(i), a.values.row(j));
  double within_b = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      within_b += kernel(b.values.row(i), b.values.row(j));
  double cross = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) cross += kernel(a.values.row(i), b.values.row(j));

  const double value =
      2.0 * within_a / (static_cast<double>(m) * static_cast<double>(m - 1)) +
      2.0 * within_b / (static_cast<double>(n) * static_cast<double>(n - 1)) -
      2.0 * cross / (static_cast<double>(m) * static_cast<double>(n));
  return {value, bandwidth};
}

struct PointwiseDiscrepancies {
  double mean_mse, mean_l2, mean_l1;
  double median_mse, median_l2, median_l1;
};

// Discrepancies between per-point sample means and medians of two batches.
inline PointwiseDiscrepancies pointwise_discrepancies(const FunctionBatch& a,
                                                      const FunctionBatch& b) {
  if (a.n_points() != b.n_points())
    throw InputSetMismatch("pointwise: batches evaluated on different input sets");
  if (a.n_functions() < 2 || b.n_functions() < 2)
    throw TooFewSamples("pointwise: need at least 2 draws per batch");
  const std::size_t d = a.n_points();
  double mean_sq = 0.0, mean_abs = 0.0, med_sq = 0.0, med_abs = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double ma = 0.0, mb = 0.0;
    for (std::size_t s = 0; s < a.n_functions(); ++s) ma += a.values(s, i);
    for (std::size_t s = 0; s < b.n_functions(); ++s) mb += b.values(s, i);
    ma /= static_cast<double>(a.n_functions());
    mb /= static_cast<double>(b.n_functions());
    const double dm = ma - mb;
    mean_sq += dm * dm;
    mean_abs += std::abs(dm);

    const double qa = detail::median_sorted(detail::sorted_column(a, i));
    const double qb = detail::median_sorted(detail::sorted_column(b, i));
    const double dq = qa - qb;
    med_sq += dq * dq;
    med_abs += std::abs(dq);
  }
  const double inv = 1.0 / static_cast<double>(d);
  PointwiseDiscrepancies out;
  out.mean_mse = mean_sq * inv;
  out.mean_l2 = std::sqrt(out.mean_mse);
  out.mean_l1 = mean_abs * inv;
  out.median_mse = med_sq * inv;
  out.median_l2 = std::sqrt(out.median_mse);
  out.median_l1 = med_abs * inv;
  return out;
}

// One row of the evaluation table comparing two function distributions.
struct MetricReport {
  double w1;
  double w2;  // normalized Gaussian W2^2 of the sample moments
  double mmd_linear;
  double mmd_poly;
  double mmd_rbf;
  double mean_mse, mean_l2, mean_l1;
  double median_mse, median_l2, median_l1;
  // metadata
  double rbf_bandwidth;
  std::size_t n_functions_a, n_functions_b, n_points;
};

inline MetricReport metric_report(const FunctionBatch& a, const FunctionBatch& b) {
  MetricReport r{};
  r.w1 = empirical_w1(a, b);
  r.w2 = w2_gaussian(moments(a), moments(b), true);
  r.mmd_linear = mmd(a, b, MmdKernel::Linear).value;
  r.mmd_poly = mmd(a, b, MmdKernel::Polynomial).value;
  const MmdResult rbf = mmd(a, b, MmdKernel::RBF);
  r.mmd_rbf = rbf.value;
  r.rbf_bandwidth = rbf.bandwidth;
  const PointwiseDiscrepancies p = pointwise_discrepancies(a, b);
  r.mean_mse = p.mean_mse;
  r.mean_l2 = p.mean_l2;
  r.mean_l1 = p.mean_l1;
  r.median_mse = p.median_mse;
  r.median_l2 = p.median_l2;
  r.median_l1 = p.median_l1;
  r.n_functions_a = a.n_functions();
  r.n_functions_b = b.n_functions();
  r.n_points = a.n_points();
  return r;
}

}  // namespace gp2bnn

#endif  // GP2BNN_LOSS_METRICS_HPP
