#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "trimshift/core.hpp"
#include "trimshift/dataset.hpp"

namespace trimshift {

/// Mid-ranks in [1, n]; tied values share the average of their rank run.
inline std::vector<double> midranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

/// Spearman correlation: Pearson correlation of mid-ranks.
/// Throws on constant input, where the correlation is undefined.
inline double spearman_rho(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("spearman_rho: length mismatch, " +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  if (a.size() < 2) throw std::invalid_argument("spearman_rho: need at least 2 points");
  const std::vector<double> ra = midranks(a);
  const std::vector<double> rb = midranks(b);
  const double rho = pearson(ra, rb);
  if (std::isnan(rho)) {
    throw std::invalid_argument("spearman_rho: constant input, correlation undefined");
  }
  return rho;
}

struct ScreeningResult {
  std::vector<std::size_t> selected;  // original column indices, best first
  std::vector<double> rho;            // Spearman correlation per selected column
  std::vector<std::size_t> constant_columns;  // flagged and scored as rho = 0
};

/// Ranks predictors by Spearman correlation with the response and keeps the
/// best p_target. Default ranking is by |rho|; signed mode ranks the most
/// positive first. Constant columns score zero and are flagged rather than
/// aborting the run.
inline ScreeningResult screen_top_p(const Dataset& data, std::size_t p_target,
                                    bool use_absolute = true) {
  if (p_target < 1 || p_target > data.p()) {
    throw std::invalid_argument("screen_top_p: p_target = " + std::to_string(p_target) +
                                " out of range [1, " + std::to_string(data.p()) + "]");
  }
  ScreeningResult result;
  std::vector<double> all_rho(data.p(), 0.0);
  for (std::size_t j = 0; j < data.p(); ++j) {
    const std::vector<double> col = data.X.col(j);
    try {
      all_rho[j] = spearman_rho(col, data.y);
    } catch (const std::invalid_argument&) {
      all_rho[j] = 0.0;
      result.constant_columns.push_back(j);
    }
  }
  std::vector<std::size_t> order(data.p());
  std::iota(order.begin(), order.end(), 0);
  const auto key = [&](std::size_t j) {
    return use_absolute ? std::abs(all_rho[j]) : all_rho[j];
  };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (key(a) != key(b)) return key(a) > key(b);
    return a < b;
  });
  order.resize(p_target);
  result.selected = std::move(order);
  result.rho.reserve(p_target);
  for (std::size_t j : result.selected) result.rho.push_back(all_rho[j]);
  return result;
}

/// Dataset restricted to the given predictor columns, in the given order.
inline Dataset reduce_columns(const Dataset& data, std::span<const std::size_t> columns) {
  if (columns.empty()) throw std::invalid_argument("reduce_columns: no columns selected");
  Matrix X(data.n(), columns.size());
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (columns[k] >= data.p()) {
      throw std::invalid_argument("reduce_columns: column index " +
                                  std::to_string(columns[k]) + " out of range");
    }
    for (std::size_t i = 0; i < data.n(); ++i) X(i, k) = data.X(i, columns[k]);
  }
  return Dataset(data.y, std::move(X));
}

}  // namespace trimshift
