#pragma once

#include <limits>
#include <stdexcept>
#include <vector>

#include "ppsl/dominance.hpp"
#include "ppsl/hypervolume.hpp"
#include "ppsl/psmodel.hpp"
#include "ppsl/sampling.hpp"
#include "ppsl/trainer.hpp"
#include "ppsl/types.hpp"

namespace ppsl {

struct PoolEntry {
  DecisionVector x;
  TaskParameter t;
  ObjectiveVector predicted;  // LCB values
};

struct CandidatePool {
  std::vector<PoolEntry> entries;

  std::size_t size() const { return entries.size(); }
};

// Samples P task-preference pairs, maps them through the parametric model
// and attaches LCB predictions from the surrogate.
template <typename SurrogateModel>
CandidatePool build_pool(const ParametricPsModel& model, const SurrogateModel& surrogate,
                         const TaskDistribution& task_dist, int pool_size, double beta,
                         RandomSource& rng, int batch_size = 1) {
  if (pool_size < batch_size)
    throw std::invalid_argument("build_pool: pool size must be >= batch size");
  CandidatePool pool;
  pool.entries.reserve(pool_size);
  PsForwardCache cache;
  for (int i = 0; i < pool_size; ++i) {
    const TaskParameter t = task_dist(rng);
    const PreferenceVector lambda = sample_simplex(rng, model.pref_dim());
    model.compose(t, cache);
    model.forward_batch(cache, lambda.weights);
    DecisionVector x(cache.x.col(0));
    ObjectiveVector predicted = surrogate.lcb(x, t, beta);
    pool.entries.push_back({std::move(x), t, std::move(predicted)});
  }
  return pool;
}

// Acquisition-time reference point: componentwise max over the observed
// objectives and pool predictions, plus a 10% span margin so every candidate
// can contribute volume.
inline Vec acquisition_reference(const std::vector<Vec>& observed, const CandidatePool& pool) {
  if (observed.empty() && pool.entries.empty())
    throw std::invalid_argument("acquisition_reference: nothing to bound");
  const Eigen::Index m =
      observed.empty() ? pool.entries.front().predicted.values.size() : observed.front().size();
  Vec hi = Vec::Constant(m, -std::numeric_limits<double>::infinity());
  Vec lo = Vec::Constant(m, std::numeric_limits<double>::infinity());
  for (const Vec& y : observed) {
    hi = hi.cwiseMax(y);
    lo = lo.cwiseMin(y);
  }
  for (const auto& e : pool.entries) {
    hi = hi.cwiseMax(e.predicted.values);
    lo = lo.cwiseMin(e.predicted.values);
  }
  Vec ref(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double span = hi[i] - lo[i];
    ref[i] = hi[i] + 0.1 * (span > 0.0 ? span : std::max(std::abs(hi[i]), 1.0));
  }
  return ref;
}

// Sequential greedy batch selection by marginal hypervolume improvement of
// the LCB predictions against the observed front plus already-selected
// predictions. Ties break to the lowest pool index. Returns pool indices in
// selection order.
inline std::vector<int> select_batch(const CandidatePool& pool,
                                     const std::vector<Vec>& observed_objectives, int batch_size,
                                     const Vec& ref) {
  if (batch_size == 0) return {};
  if (batch_size < 0 || pool.size() < static_cast<std::size_t>(batch_size))
    throw std::invalid_argument("select_batch: pool smaller than batch");

  std::vector<Vec> front;
  for (std::size_t i : nondominated_indices(observed_objectives))
    front.push_back(observed_objectives[i]);

  std::vector<int> selected;
  std::vector<bool> taken(pool.size(), false);
  for (int b = 0; b < batch_size; ++b) {
    int best_idx = -1;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (taken[i]) continue;
      const double gain = hvi({pool.entries[i].predicted.values}, front, ref);
      if (gain > best_gain) {
        best_gain = gain;
        best_idx = static_cast<int>(i);
      }
    }
    taken[best_idx] = true;
    selected.push_back(best_idx);
    front.push_back(pool.entries[best_idx].predicted.values);
  }
  return selected;
}

inline std::vector<int> select_batch(const CandidatePool& pool, const EvaluationArchive& archive,
                                     int batch_size, const Vec& ref) {
  return select_batch(pool, archive.objectives(), batch_size, ref);
}

}  // namespace ppsl
