#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ppsl/hypervolume.hpp"
#include "ppsl/problems.hpp"
#include "ppsl/types.hpp"

namespace ppsl {

// Objective-space normalization window for metric hypervolume.
struct NormalizationSpec {
  Vec ideal;
  Vec nadir;

  NormalizationSpec() = default;
  NormalizationSpec(Vec i, Vec n) : ideal(std::move(i)), nadir(std::move(n)) {
    if (ideal.size() != nadir.size()) throw std::invalid_argument("NormalizationSpec: size mismatch");
    for (Eigen::Index k = 0; k < ideal.size(); ++k)
      if (!(nadir[k] > ideal[k]))
        throw std::invalid_argument("NormalizationSpec: nadir must exceed ideal componentwise");
  }

  Vec normalize(const Vec& y) const {
    return (y - ideal).cwiseQuotient(nadir - ideal);
  }
};

// Ideal/nadir from a dense discretization of the analytic front.
inline NormalizationSpec normalization_from_front(const ParametricProblem& problem,
                                                  const TaskParameter& t, int k = 10000) {
  const auto front = problem.analytic_front(t, k);
  Vec ideal = front.front().values;
  Vec nadir = front.front().values;
  for (const auto& f : front) {
    ideal = ideal.cwiseMin(f.values);
    nadir = nadir.cwiseMax(f.values);
  }
  // guard against degenerate spans on flat fronts
  for (Eigen::Index i = 0; i < ideal.size(); ++i)
    if (!(nadir[i] > ideal[i])) nadir[i] = ideal[i] + 1.0;
  return NormalizationSpec(std::move(ideal), std::move(nadir));
}

// HV of the normalized points against the fixed reference (1.1, ..., 1.1);
// points with any normalized component >= 1.1 contribute zero.
inline double normalized_hv(const std::vector<Vec>& points, const NormalizationSpec& spec) {
  std::vector<Vec> scaled;
  scaled.reserve(points.size());
  for (const Vec& y : points) scaled.push_back(spec.normalize(y));
  return hypervolume(scaled, Vec::Constant(spec.ideal.size(), 1.1));
}

// Inverted generational distance: mean over reference-front points of the
// Euclidean distance to the nearest approximation point.
inline double igd(const std::vector<Vec>& reference_front, const std::vector<Vec>& approx_front) {
  if (reference_front.empty() || approx_front.empty())
    throw std::invalid_argument("igd: fronts must be non-empty");
  double total = 0.0;
  for (const Vec& r : reference_front) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec& a : approx_front) best = std::min(best, (r - a).norm());
    total += best;
  }
  return total / static_cast<double>(reference_front.size());
}

inline double migd(const std::vector<double>& per_step_igd) {
  if (per_step_igd.empty()) throw std::invalid_argument("migd: empty sequence");
  double s = 0.0;
  for (double v : per_step_igd) s += v;
  return s / static_cast<double>(per_step_igd.size());
}

// Mean hypervolume across time steps: HV(PF_t | z_ref(t)) where z_ref(t) is
// the componentwise max of the true front at t.
inline double mhv(const std::vector<std::vector<Vec>>& per_step_fronts,
                  const std::vector<Vec>& per_step_refs) {
  if (per_step_fronts.size() != per_step_refs.size())
    throw std::invalid_argument("mhv: misaligned sequences");
  if (per_step_fronts.empty()) throw std::invalid_argument("mhv: empty sequence");
  double s = 0.0;
  for (std::size_t i = 0; i < per_step_fronts.size(); ++i)
    s += hypervolume(per_step_fronts[i], per_step_refs[i]);
  return s / static_cast<double>(per_step_fronts.size());
}

// z_ref(t): componentwise max over the true front.
inline Vec mhv_reference(const std::vector<ObjectiveVector>& true_front) {
  if (true_front.empty()) throw std::invalid_argument("mhv_reference: empty front");
  Vec r = true_front.front().values;
  for (const auto& f : true_front) r = r.cwiseMax(f.values);
  return r;
}

}  // namespace ppsl
