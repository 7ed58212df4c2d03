#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "trimshift/dataset.hpp"

namespace trimshift {

/// sign(z) * max(|z| - t, 0).
inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

/// r if r^2 > lambda2, else 0. The boundary r^2 == lambda2 maps to 0: both
/// choices give the same objective and the sparse one is canonical.
inline double hard_threshold_sq(double r, double lambda2) {
  return (r * r > lambda2) ? r : 0.0;
}

inline double l1_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

/// Exact nonzero count; entries are compared against 0.0 with no tolerance.
inline std::size_t l0_count(std::span<const double> v) {
  std::size_t k = 0;
  for (double x : v) {
    if (x != 0.0) ++k;
  }
  return k;
}

/// Indices of the h smallest values, ties broken by original index.
/// Returned sorted ascending by index.
inline std::vector<std::size_t> smallest_h_indices(std::span<const double> values,
                                                   std::size_t h) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] < values[b];
    return a < b;
  });
  idx.resize(h);
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// Sum of the h smallest entries, accumulated in sorted order so the result
/// is independent of observation order. Accepts h == 0 (empty sum).
inline double sum_h_smallest(std::vector<double> values, std::size_t h) {
  std::sort(values.begin(), values.end());
  double s = 0.0;
  for (std::size_t i = 0; i < h; ++i) s += values[i];
  return s;
}

/// Pearson correlation; NaN when either argument has zero variance.
inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("pearson: length mismatch, " + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()));
  }
  if (a.size() < 2) throw std::invalid_argument("pearson: need at least 2 points");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

/// sum_i (y_i - x_i'beta - gamma_i)^2 + lambda1*||beta||_1 + lambda2*||gamma||_0.
inline double joint_objective(const Dataset& data, std::span<const double> beta,
                              std::span<const double> gamma, const PenaltyConfig& pen) {
  pen.validate();
  std::vector<double> r = residuals(data, beta, gamma);
  double rss = 0.0;
  for (double v : r) rss += v * v;
  return rss + pen.lambda1 * l1_norm(beta) +
         pen.lambda2 * static_cast<double>(l0_count(gamma));
}

/// Sum of the h smallest squared residuals plus lambda1*||beta||_1.
inline double trimmed_objective(const Dataset& data, std::span<const double> beta,
                                std::size_t h, double lambda1) {
  if (h < 1 || h > data.n()) {
    throw std::invalid_argument("trimmed_objective: h = " + std::to_string(h) +
                                " out of range [1, " + std::to_string(data.n()) + "]");
  }
  std::vector<double> r = residuals(data, beta);
  for (double& v : r) v = v * v;
  return sum_h_smallest(std::move(r), h) + lambda1 * l1_norm(beta);
}

}  // namespace trimshift
