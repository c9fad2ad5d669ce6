#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ppsl/acquisition.hpp"
#include "ppsl/metrics.hpp"
#include "ppsl/problems.hpp"
#include "ppsl/psmodel.hpp"
#include "ppsl/surrogate.hpp"
#include "ppsl/trainer.hpp"

namespace ppsl {

enum class RunMode { static_mode, dynamic_mode };

enum class AblationMode { full, no_history, random };

inline AblationMode ablation_mode(const std::string& flag) {
  if (flag == "full") return AblationMode::full;
  if (flag == "no_history") return AblationMode::no_history;
  if (flag == "random") return AblationMode::random;
  throw std::invalid_argument("ablation_mode: unknown flag '" + flag + "'");
}

inline std::string to_string(AblationMode m) {
  switch (m) {
    case AblationMode::full: return "full";
    case AblationMode::no_history: return "no_history";
    default: return "random";
  }
}

struct RunConfig {
  std::string problem = "synth-p1";
  std::map<std::string, double> problem_params;
  RunMode mode = RunMode::static_mode;
  AblationMode ablation = AblationMode::full;
  std::uint64_t seed = 0;

  long budget = 200;   // total expensive evaluations (static mode)
  int n_init = -1;     // -1: max(20, 2(n+p)) static, 20 dynamic
  int batch_size = 5;  // B
  int pool_size = 1000;

  TrainConfig train;
  GpConfig gp;
  double ideal_epsilon = 1e-3;

  std::vector<int> ps_hidden;  // empty -> paper defaults
  std::vector<int> hn_hidden;
  int rank = 3;

  int heldout_count = 10;
  int infer_points = 100;
  int igd_reference_points = 500;

  DynamicSpec dynamic;  // dynamic mode only

  int resolved_n_init(int n, int p) const {
    if (n_init >= 0) return n_init;
    return mode == RunMode::static_mode ? std::max(20, 2 * (n + p)) : 20;
  }
};

struct LoggedEvaluation {
  EvaluationRecord rec;
  int iteration;  // 0 = initial design
  long counter;   // cumulative expensive-evaluation count
};

struct IterationTrace {
  int iteration = 0;
  long evaluations = 0;
  double loss_first = std::numeric_limits<double>::quiet_NaN();
  double loss_last = std::numeric_limits<double>::quiet_NaN();
  double loss_mean = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> heldout_hv;
};

struct RunResult {
  ProblemPtr problem;
  EvaluationArchive archive;  // full archive (append-only in static mode)
  std::vector<LoggedEvaluation> log;
  ParametricPsModel model;
  GaussianSurrogate surrogate;
  std::vector<IterationTrace> trace;
  std::vector<TaskParameter> heldout;
};

// Preference grid for inference: uniform grid on the segment for m=2, a
// simplex lattice for m>=3 (first k nodes in lexicographic order).
inline std::vector<PreferenceVector> preference_grid(int m, int k) {
  if (k < 1) throw std::invalid_argument("preference_grid: k must be >= 1");
  std::vector<PreferenceVector> out;
  out.reserve(k);
  if (m == 2) {
    for (int i = 0; i < k; ++i) {
      const double a = k == 1 ? 0.5 : static_cast<double>(i) / (k - 1);
      Vec w(2);
      w << a, 1.0 - a;
      out.emplace_back(std::move(w));
    }
    return out;
  }
  // smallest lattice resolution H whose node count reaches k
  auto lattice_size = [m](long h) {
    long count = 1;
    for (int i = 1; i < m; ++i) count = count * (h + i) / i;
    return count;  // C(h+m-1, m-1)
  };
  long h = 1;
  while (lattice_size(h) < k) ++h;
  std::vector<int> idx(m, 0);
  std::function<void(int, int)> enumerate = [&](int dim, int remaining) {
    if (static_cast<int>(out.size()) == k) return;
    if (dim == m - 1) {
      idx[dim] = remaining;
      Vec w(m);
      for (int i = 0; i < m; ++i) w[i] = static_cast<double>(idx[i]) / static_cast<double>(h);
      out.emplace_back(std::move(w));
      return;
    }
    for (int v = 0; v <= remaining; ++v) {
      idx[dim] = v;
      enumerate(dim + 1, remaining - v);
    }
  };
  enumerate(0, static_cast<int>(h));
  return out;
}

// k preferences spread over the simplex, forwarded through the model at
// parameter t. Performs no expensive evaluations.
inline std::vector<std::pair<PreferenceVector, DecisionVector>> infer_front(
    const ParametricPsModel& model, const TaskParameter& t, int k) {
  const auto prefs = preference_grid(model.pref_dim(), k);
  Mat lambdas(model.pref_dim(), k);
  for (int i = 0; i < k; ++i) lambdas.col(i) = prefs[i].weights;
  PsForwardCache cache;
  model.compose(t, cache);
  model.forward_batch(cache, lambdas);
  std::vector<std::pair<PreferenceVector, DecisionVector>> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) out.emplace_back(prefs[i], DecisionVector(cache.x.col(i)));
  return out;
}

namespace detail {

// Normalized HV of the audit-evaluated inferred front at parameter t.
inline double heldout_normalized_hv(const ParametricPsModel& model, ParametricProblem& problem,
                                    const TaskParameter& t, int k,
                                    const NormalizationSpec& spec) {
  const auto front = infer_front(model, t, k);
  std::vector<Vec> objs;
  objs.reserve(front.size());
  for (const auto& [lambda, x] : front) objs.push_back(problem.evaluate_audit(x, t).values);
  return normalized_hv(nondominated_filter(objs), spec);
}

}  // namespace detail

inline ProblemPtr build_problem(const RunConfig& cfg) {
  return make_problem(cfg.problem, cfg.problem_params);
}

inline ModelConfig model_config_for(const RunConfig& cfg, const ParametricProblem& problem) {
  ModelConfig mc;
  mc.pref_dim = problem.num_objectives();
  mc.decision_box = problem.decision_box();
  mc.task_dim = std::max(1, problem.parameter_dim());
  mc.ps_hidden = cfg.ps_hidden;
  mc.hn_hidden = cfg.hn_hidden;
  mc.rank = cfg.rank;
  return mc;
}

// Algorithm phases for static parametric problems: space-filling init, then
// fit -> train -> pool -> greedy batch -> evaluate until the budget is
// exhausted. Held-out parameters get one normalized-HV entry per checkpoint.
inline RunResult run_static(const RunConfig& cfg) {
  if (cfg.mode != RunMode::static_mode) throw std::invalid_argument("run_static: config not static");
  cfg.train.validate();
  ProblemPtr problem = build_problem(cfg);
  const int n = problem->decision_dim();
  const int p = problem->parameter_dim();
  const int m = problem->num_objectives();
  const int n_init = cfg.resolved_n_init(n, p);
  if (n_init < 2) throw std::invalid_argument("run: initial design must have >= 2 points");
  if (cfg.budget < n_init) throw std::invalid_argument("run: budget smaller than initial design");
  if (cfg.batch_size < 1) throw std::invalid_argument("run: batch size must be >= 1");
  const int iterations = static_cast<int>((cfg.budget - n_init) / cfg.batch_size);

  RandomSource root(cfg.seed);
  RandomSource rng_init = root.split("init");
  RandomSource rng_model = root.split("model-init");
  RandomSource rng_heldout = root.split("heldout");

  RunResult result;
  result.problem = problem;

  // held-out evaluation parameters, fixed by seed, never used for training
  for (int i = 0; i < cfg.heldout_count; ++i)
    result.heldout.push_back(sample_task(rng_heldout, problem->parameter_box()));
  std::vector<NormalizationSpec> heldout_norm;
  if (problem->has_analytic_front())
    for (const auto& t : result.heldout) heldout_norm.push_back(normalization_from_front(*problem, t));

  ModelConfig mc = model_config_for(cfg, *problem);
  result.model = ParametricPsModel::init(mc, rng_model);

  auto log_eval = [&](DecisionVector x, TaskParameter t, int iter) {
    ObjectiveVector y = problem->evaluate(x, t);
    result.archive.push(x, t, y);
    result.log.push_back({{std::move(x), std::move(t), std::move(y)}, iter,
                          problem->evaluation_count()});
  };

  for (auto& [x, t] : space_filling_init(rng_init, n_init, problem->decision_box(),
                                         problem->parameter_box()))
    log_eval(std::move(x), std::move(t), 0);

  auto checkpoint_metrics = [&](IterationTrace& row) {
    if (heldout_norm.empty()) return;
    for (std::size_t h = 0; h < result.heldout.size(); ++h)
      row.heldout_hv.push_back(detail::heldout_normalized_hv(
          result.model, *problem, result.heldout[h], cfg.infer_points, heldout_norm[h]));
  };

  {
    IterationTrace row;
    row.iteration = 0;
    row.evaluations = problem->evaluation_count();
    checkpoint_metrics(row);
    result.trace.push_back(std::move(row));
  }

  const TaskDistribution task_dist = uniform_task_dist(problem->parameter_box());
  for (int iter = 1; iter <= iterations; ++iter) {
    const std::string tag = "iter-" + std::to_string(iter);
    RandomSource rng_fit = root.split(tag + "-fit");
    RandomSource rng_train = root.split(tag + "-train");
    RandomSource rng_pool = root.split(tag + "-pool");

    result.surrogate = GaussianSurrogate::fit(result.archive, problem->decision_box(),
                                              problem->parameter_box(), cfg.gp, rng_fit,
                                              result.surrogate.fitted() ? &result.surrogate : nullptr);
    const auto losses = train_phase(result.model, result.surrogate, result.archive, cfg.train,
                                    rng_train, task_dist, cfg.ideal_epsilon);

    CandidatePool pool = build_pool(result.model, result.surrogate, task_dist, cfg.pool_size,
                                    cfg.train.beta, rng_pool, cfg.batch_size);
    const Vec ref = acquisition_reference(result.archive.objectives(), pool);
    for (int idx : select_batch(pool, result.archive, cfg.batch_size, ref))
      log_eval(pool.entries[idx].x, pool.entries[idx].t, iter);

    IterationTrace row;
    row.iteration = iter;
    row.evaluations = problem->evaluation_count();
    if (!losses.empty()) {
      row.loss_first = losses.front();
      row.loss_last = losses.back();
      double s = 0.0;
      for (double v : losses) s += v;
      row.loss_mean = s / static_cast<double>(losses.size());
    }
    checkpoint_metrics(row);
    result.trace.push_back(std::move(row));
  }

  return result;
}

}  // namespace ppsl
