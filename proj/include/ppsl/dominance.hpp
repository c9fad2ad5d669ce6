#pragma once

#include <stdexcept>
#include <vector>

#include "ppsl/types.hpp"

namespace ppsl {

// Pareto dominance for minimization: a <= b componentwise with at least one
// strict inequality.
inline bool dominates(const Vec& a, const Vec& b) {
  bool strict = false;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strict = true;
  }
  return strict;
}

// Indices of the points not dominated by any other input point, in input
// order. Duplicates survive together (neither dominates the other).
inline std::vector<std::size_t> nondominated_indices(const std::vector<Vec>& points) {
  const std::size_t n = points.size();
  for (std::size_t i = 1; i < n; ++i)
    if (points[i].size() != points[0].size())
      throw std::invalid_argument("nondominated_indices: inconsistent dimensions");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < n && !dominated; ++j)
      if (j != i && dominates(points[j], points[i])) dominated = true;
    if (!dominated) keep.push_back(i);
  }
  return keep;
}

inline std::vector<Vec> nondominated_filter(const std::vector<Vec>& points) {
  std::vector<Vec> out;
  for (std::size_t i : nondominated_indices(points)) out.push_back(points[i]);
  return out;
}

inline std::vector<ObjectiveVector> nondominated_filter(const std::vector<ObjectiveVector>& points) {
  std::vector<Vec> raw;
  raw.reserve(points.size());
  for (const auto& p : points) raw.push_back(p.values);
  std::vector<ObjectiveVector> out;
  for (std::size_t i : nondominated_indices(raw)) out.push_back(points[i]);
  return out;
}

}  // namespace ppsl
