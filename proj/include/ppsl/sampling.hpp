#pragma once

#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ppsl/rng.hpp"
#include "ppsl/types.hpp"

namespace ppsl {

// Uniform sample on the (m-1)-simplex: normalized i.i.d. unit exponentials
// (equivalently a flat Dirichlet).
inline PreferenceVector sample_simplex(RandomSource& rng, int m) {
  if (m < 2) throw std::invalid_argument("sample_simplex: m must be >= 2");
  Vec e(m);
  double sum = 0.0;
  do {
    for (int i = 0; i < m; ++i) e[i] = rng.exponential();
    sum = e.sum();
  } while (sum <= 0.0);
  return PreferenceVector(e / sum);
}

// Uniform draw over a parameter box; degenerate dimensions yield lb exactly.
inline TaskParameter sample_task(RandomSource& rng, const Box& bounds) {
  Vec v(bounds.dim());
  for (int i = 0; i < bounds.dim(); ++i)
    v[i] = bounds.lb[i] == bounds.ub[i] ? bounds.lb[i] : rng.uniform(bounds.lb[i], bounds.ub[i]);
  return TaskParameter(std::move(v));
}

namespace detail {

inline std::vector<int> random_permutation(RandomSource& rng, int n) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (int i = n - 1; i > 0; --i)
    std::swap(p[i], p[static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(i) + 1))]);
  return p;
}

// Latin hypercube over an arbitrary box: one point per stratum of width
// (ub-lb)/n in every dimension.
inline Mat latin_hypercube(RandomSource& rng, int n_points, const Box& box) {
  const int d = box.dim();
  Mat pts(d, n_points);
  for (int j = 0; j < d; ++j) {
    const auto perm = random_permutation(rng, n_points);
    for (int i = 0; i < n_points; ++i) {
      const double u = (perm[i] + rng.uniform()) / n_points;
      pts(j, i) = box.lb[j] + (box.ub[j] - box.lb[j]) * u;
    }
  }
  return pts;
}

}  // namespace detail

// Joint Latin-hypercube design over the (n+p)-dimensional decision x task
// box; the marginal of every dimension is stratified.
inline std::vector<std::pair<DecisionVector, TaskParameter>> space_filling_init(
    RandomSource& rng, int n_points, const Box& decision_box, const Box& parameter_box) {
  if (n_points < 1) throw std::invalid_argument("space_filling_init: n_points must be >= 1");
  if (decision_box.dim() < 1) throw std::invalid_argument("space_filling_init: empty decision box");
  const int n = decision_box.dim();
  const int p = parameter_box.dim();
  Vec lb(n + p), ub(n + p);
  lb.head(n) = decision_box.lb;
  ub.head(n) = decision_box.ub;
  if (p > 0) {
    lb.tail(p) = parameter_box.lb;
    ub.tail(p) = parameter_box.ub;
  }
  const Mat pts = detail::latin_hypercube(rng, n_points, Box(lb, ub));
  std::vector<std::pair<DecisionVector, TaskParameter>> out;
  out.reserve(n_points);
  for (int i = 0; i < n_points; ++i)
    out.emplace_back(DecisionVector(pts.col(i).head(n)),
                     TaskParameter(p > 0 ? Vec(pts.col(i).tail(p)) : Vec(0)));
  return out;
}

}  // namespace ppsl
