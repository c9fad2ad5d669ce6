#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "ppsl/types.hpp"

namespace ppsl {

namespace detail {

// Area dominated by `pts` up to `ref` in 2-D (minimization). Sorted sweep:
// ascending f1, tracking the best f2 seen so far.
inline double hv2d(std::vector<Vec> pts, double r0, double r1) {
  std::erase_if(pts, [&](const Vec& p) { return p[0] >= r0 || p[1] >= r1; });
  std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) {
    return a[0] != b[0] ? a[0] < b[0] : a[1] < b[1];
  });
  double hv = 0.0;
  double best_f2 = r1;
  for (const Vec& p : pts) {
    if (p[1] >= best_f2) continue;
    hv += (r0 - p[0]) * (best_f2 - p[1]);
    best_f2 = p[1];
  }
  return hv;
}

// Exact 3-D hypervolume by slicing along the third objective: between
// consecutive f3 levels the dominated region is a 2-D hypervolume times the
// slab height.
inline double hv3d(std::vector<Vec> pts, const Vec& ref) {
  std::erase_if(pts, [&](const Vec& p) { return p[0] >= ref[0] || p[1] >= ref[1] || p[2] >= ref[2]; });
  if (pts.empty()) return 0.0;
  std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) { return a[2] < b[2]; });
  std::vector<double> levels;
  for (const Vec& p : pts)
    if (levels.empty() || p[2] > levels.back()) levels.push_back(p[2]);
  levels.push_back(ref[2]);

  double hv = 0.0;
  std::vector<Vec> slice;
  std::size_t next = 0;
  for (std::size_t k = 0; k + 1 < levels.size(); ++k) {
    while (next < pts.size() && pts[next][2] <= levels[k]) {
      slice.push_back(pts[next].head(2));
      ++next;
    }
    hv += hv2d(slice, ref[0], ref[1]) * (levels[k + 1] - levels[k]);
  }
  return hv;
}

}  // namespace detail

// Exact hypervolume indicator for minimization: Lebesgue measure of the
// union of boxes [p, ref]. Points that do not strictly dominate the
// reference contribute zero. Only m in {2, 3} is supported.
inline double hypervolume(const std::vector<Vec>& points, const Vec& ref) {
  if (points.empty()) return 0.0;
  const Eigen::Index m = ref.size();
  for (const Vec& p : points)
    if (p.size() != m) throw std::invalid_argument("hypervolume: dimension mismatch with reference");
  if (m == 2) return detail::hv2d(points, ref[0], ref[1]);
  if (m == 3) return detail::hv3d(points, ref);
  throw std::invalid_argument("hypervolume: only 2 or 3 objectives supported");
}

// Hypervolume improvement HV(front U new_points) - HV(front).
inline double hvi(const std::vector<Vec>& new_points, const std::vector<Vec>& front, const Vec& ref) {
  std::vector<Vec> merged = front;
  merged.insert(merged.end(), new_points.begin(), new_points.end());
  return hypervolume(merged, ref) - hypervolume(front, ref);
}

}  // namespace ppsl
