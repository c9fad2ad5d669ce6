#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ppsl/psmodel.hpp"
#include "ppsl/sampling.hpp"
#include "ppsl/scalarize.hpp"
#include "ppsl/types.hpp"

namespace ppsl {

struct TrainConfig {
  int n_tasks = 20;           // N_t, task parameters per batch
  int n_prefs = 10;           // N_lambda, preferences per task
  int steps = 100;            // J, inner steps per BO iteration
  double eta_base = 1e-3;     // eta_b
  double eta_hypernet = 1e-5; // eta_hn
  double nu = 0.01;           // STCH smoothing
  double beta = 0.05;         // LCB coefficient

  void validate() const {
    if (n_tasks < 1 || n_prefs < 1 || steps < 0)
      throw std::invalid_argument("TrainConfig: counts must be positive");
    if (!(eta_base > 0.0) || !(eta_hypernet > 0.0))
      throw std::invalid_argument("TrainConfig: learning rates must be > 0");
    if (!(nu > 0.0)) throw std::invalid_argument("TrainConfig: nu must be > 0");
    if (beta < 0.0) throw std::invalid_argument("TrainConfig: beta must be >= 0");
  }
};

using TaskDistribution = std::function<TaskParameter(RandomSource&)>;

inline TaskDistribution uniform_task_dist(const Box& box) {
  return [box](RandomSource& rng) { return sample_task(rng, box); };
}

// One Monte-Carlo cell: a task parameter and its batch of preference columns.
struct McSample {
  TaskParameter t;
  Mat lambdas;  // m x N_lambda
};

template <typename SurrogateModel>
std::pair<double, PsGradients> mc_loss_on_samples(const ParametricPsModel& model,
                                                  const SurrogateModel& surrogate,
                                                  const IdealPoint& ideal, const TrainConfig& cfg,
                                                  const std::vector<McSample>& samples) {
  const StchConfig stch_cfg{cfg.nu};
  PsGradients grads = model.zero_gradients();
  double loss_sum = 0.0;
  long count = 0;
  PsForwardCache cache;
  for (const auto& sample : samples) {
    model.compose(sample.t, cache);
    const Mat& x = model.forward_batch(cache, sample.lambdas);
    Mat grad_x(model.decision_dim(), sample.lambdas.cols());
    for (Eigen::Index j = 0; j < sample.lambdas.cols(); ++j) {
      auto [value, gx] =
          surrogate_stch(DecisionVector(x.col(j)), sample.t, PreferenceVector(sample.lambdas.col(j)),
                         ideal, stch_cfg, surrogate, cfg.beta);
      if (!std::isfinite(value))
        throw std::runtime_error("mc loss: non-finite surrogate loss at task sample t=" +
                                 std::to_string(sample.t.values.size() ? sample.t.values[0] : 0.0) +
                                 ", preference column " + std::to_string(j));
      loss_sum += value;
      grad_x.col(j) = gx;
      ++count;
    }
    model.backward_batch(cache, grad_x, grads);
  }
  grads.scale(1.0 / static_cast<double>(count));
  return {loss_sum / static_cast<double>(count), std::move(grads)};
}

inline std::vector<McSample> draw_mc_samples(const ParametricPsModel& model, const TrainConfig& cfg,
                                             RandomSource& rng, const TaskDistribution& task_dist) {
  std::vector<McSample> samples;
  samples.reserve(cfg.n_tasks);
  for (int i = 0; i < cfg.n_tasks; ++i) {
    McSample s;
    s.t = task_dist(rng);
    s.lambdas.resize(model.pref_dim(), cfg.n_prefs);
    for (int j = 0; j < cfg.n_prefs; ++j)
      s.lambdas.col(j) = sample_simplex(rng, model.pref_dim()).weights;
    samples.push_back(std::move(s));
  }
  return samples;
}

// Monte-Carlo estimate of the surrogate STCH training objective and its
// gradients, averaged over N_t x N_lambda fresh samples.
template <typename SurrogateModel>
std::pair<double, PsGradients> mc_loss_and_grads(const ParametricPsModel& model,
                                                 const SurrogateModel& surrogate,
                                                 const IdealPoint& ideal, const TrainConfig& cfg,
                                                 RandomSource& rng,
                                                 const TaskDistribution& task_dist) {
  const auto samples = draw_mc_samples(model, cfg, rng, task_dist);
  return mc_loss_on_samples(model, surrogate, ideal, cfg, samples);
}

// Phase 2: J stochastic gradient steps against the surrogate loss. The ideal
// point is refreshed from the archive once at phase start (the archive is
// frozen during the phase). Returns the per-step loss sequence.
template <typename SurrogateModel>
std::vector<double> train_phase(ParametricPsModel& model, const SurrogateModel& surrogate,
                                const EvaluationArchive& archive, const TrainConfig& cfg,
                                RandomSource& rng, const TaskDistribution& task_dist,
                                double ideal_epsilon = 1e-3) {
  cfg.validate();
  std::vector<double> losses;
  if (cfg.steps == 0) return losses;
  const IdealPoint ideal = update_ideal(archive, ideal_epsilon);
  losses.reserve(cfg.steps);
  for (int j = 0; j < cfg.steps; ++j) {
    auto [loss, grads] = mc_loss_and_grads(model, surrogate, ideal, cfg, rng, task_dist);
    model.sgd_step(grads, cfg.eta_base, cfg.eta_hypernet);
    losses.push_back(loss);
  }
  return losses;
}

}  // namespace ppsl
