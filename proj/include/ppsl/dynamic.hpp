#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppsl/runner.hpp"

namespace ppsl {

// Task distribution whose every draw equals the current time (all N_t
// samples identical within a generation).
inline TaskDistribution degenerate_task_dist(double t_now) {
  if (t_now < 0.0 || t_now > 1.0)
    throw std::invalid_argument("degenerate_task_dist: t must lie in [0, 1]");
  return [t_now](RandomSource&) {
    Vec v(1);
    v[0] = t_now;
    return TaskParameter(std::move(v));
  };
}

struct GenerationTrace {
  int tau = 0;
  double t_env = 0.0;   // benchmark clock (1/n_t) * floor(tau/tau_t)
  double t_frac = 0.0;  // online clock tau / T_max
  double igd_value = std::numeric_limits<double>::quiet_NaN();
  double hv_value = std::numeric_limits<double>::quiet_NaN();
  int archive_size = 0;  // FIFO window length after the generation
  long evaluations = 0;
  double loss_mean = std::numeric_limits<double>::quiet_NaN();
  int batch_start = 0;  // index of first batch record in the full log
  int batch_count = 0;
};

// One solution of a per-step front as logged to fronts/*.csv; lambda is
// empty in random mode (no model-generated preference).
struct FrontPoint {
  Vec lambda;
  Vec x;
  Vec y;
};

struct DynamicRunState {
  int tau = 0;
  double t_env = 0.0;
  EvaluationArchive window;  // FIFO, capacity 200 by default
  std::vector<LoggedEvaluation> log;
  ParametricPsModel model;
  GaussianSurrogate surrogate;
  std::vector<GenerationTrace> traces;
  std::vector<std::vector<Vec>> step_fronts;        // non-dominated audit objectives
  std::vector<std::vector<FrontPoint>> step_points; // full logged solution sets
};

namespace detail {

// Records evaluated at the current environment time (the "current
// generation" front for acquisition).
inline std::vector<Vec> current_environment_objectives(const std::vector<LoggedEvaluation>& log,
                                                       double t_env) {
  std::vector<Vec> objs;
  for (const auto& e : log)
    if (e.rec.t.dim() == 1 && e.rec.t.values[0] == t_env) objs.push_back(e.rec.y.values);
  return objs;
}

inline EvaluationArchive tail_window(const EvaluationArchive& window, std::size_t count) {
  EvaluationArchive out;
  const std::size_t start = window.size() > count ? window.size() - count : 0;
  for (std::size_t i = start; i < window.size(); ++i) out.push(window[i]);
  return out;
}

}  // namespace detail

// Executes one generation: advance the clock, refit the GP on the windowed
// archive, train with the degenerate task distribution, select a batch
// against the current-environment front, evaluate at the current environment
// only, push into the FIFO window and record metrics. Returns false once
// tau reaches T_max (budget exhausted).
inline bool step_generation(DynamicRunState& state, ParametricProblem& problem,
                            const RunConfig& cfg, const RandomSource& root) {
  const DynamicSpec& spec = cfg.dynamic;
  if (state.tau >= spec.t_max) return false;

  const int tau = state.tau;
  const double t_env = time_index(spec, tau);
  state.t_env = t_env;
  Vec tv(1);
  tv[0] = t_env;
  const TaskParameter t_cur(tv);
  const TaskDistribution dist = degenerate_task_dist(t_env);
  const std::string tag = "gen-" + std::to_string(tau);

  GenerationTrace trace;
  trace.tau = tau;
  trace.t_env = t_env;
  trace.t_frac = static_cast<double>(tau) / spec.t_max;
  trace.batch_start = static_cast<int>(state.log.size());

  std::vector<std::pair<DecisionVector, TaskParameter>> batch;
  double loss_mean = std::numeric_limits<double>::quiet_NaN();

  if (cfg.ablation == AblationMode::random) {
    // Phases 2-3 replaced by uniform decision-space sampling; the PS model
    // never trains.
    RandomSource rng = root.split(tag + "-random");
    for (int b = 0; b < cfg.batch_size; ++b) {
      Vec x(problem.decision_dim());
      for (int j = 0; j < problem.decision_dim(); ++j)
        x[j] = rng.uniform(problem.decision_box().lb[j], problem.decision_box().ub[j]);
      batch.emplace_back(DecisionVector(std::move(x)), t_cur);
    }
  } else {
    RandomSource rng_fit = root.split(tag + "-fit");
    RandomSource rng_train = root.split(tag + "-train");
    RandomSource rng_pool = root.split(tag + "-pool");

    const EvaluationArchive fit_view =
        cfg.ablation == AblationMode::no_history
            ? detail::tail_window(state.window, static_cast<std::size_t>(cfg.batch_size))
            : state.window;
    state.surrogate =
        GaussianSurrogate::fit(fit_view, problem.decision_box(), problem.parameter_box(), cfg.gp,
                               rng_fit, state.surrogate.fitted() ? &state.surrogate : nullptr);

    const auto losses = train_phase(state.model, state.surrogate, state.window, cfg.train,
                                    rng_train, dist, cfg.ideal_epsilon);
    if (!losses.empty()) {
      double s = 0.0;
      for (double v : losses) s += v;
      loss_mean = s / static_cast<double>(losses.size());
    }

    CandidatePool pool = build_pool(state.model, state.surrogate, dist, cfg.pool_size,
                                    cfg.train.beta, rng_pool, cfg.batch_size);
    const std::vector<Vec> env_objs = detail::current_environment_objectives(state.log, t_env);
    const Vec ref = acquisition_reference(env_objs, pool);
    for (int idx : select_batch(pool, env_objs, cfg.batch_size, ref))
      batch.emplace_back(pool.entries[idx].x, pool.entries[idx].t);
  }

  for (auto& [x, t] : batch) {
    ObjectiveVector y = problem.evaluate(x, t);
    state.window.push(x, t, y);
    state.log.push_back({{x, t, y}, tau + 1, problem.evaluation_count()});
  }
  trace.batch_count = static_cast<int>(batch.size());

  // Per-step metrics against the analytic front at the current environment.
  std::vector<Vec> front;
  std::vector<FrontPoint> points;
  if (cfg.ablation == AblationMode::random) {
    std::vector<Vec> objs;
    for (std::size_t i = static_cast<std::size_t>(trace.batch_start); i < state.log.size(); ++i) {
      objs.push_back(state.log[i].rec.y.values);
      points.push_back({Vec(0), state.log[i].rec.x.values, state.log[i].rec.y.values});
    }
    front = nondominated_filter(objs);
  } else {
    std::vector<Vec> objs;
    for (const auto& [lambda, x] : infer_front(state.model, t_cur, cfg.infer_points)) {
      Vec y = problem.evaluate_audit(x, t_cur).values;
      points.push_back({lambda.weights, x.values, y});
      objs.push_back(std::move(y));
    }
    front = nondominated_filter(objs);
  }
  state.step_fronts.push_back(front);
  state.step_points.push_back(std::move(points));
  if (problem.has_analytic_front()) {
    const auto ref_front = problem.analytic_front(t_cur, cfg.igd_reference_points);
    std::vector<Vec> ref_objs;
    ref_objs.reserve(ref_front.size());
    for (const auto& f : ref_front) ref_objs.push_back(f.values);
    trace.igd_value = igd(ref_objs, front);
    trace.hv_value = hypervolume(front, mhv_reference(ref_front));
  }

  trace.archive_size = static_cast<int>(state.window.size());
  trace.evaluations = problem.evaluation_count();
  trace.loss_mean = loss_mean;
  state.traces.push_back(std::move(trace));
  state.tau = tau + 1;
  return true;
}

struct DynamicRunResult {
  ProblemPtr problem;
  DynamicRunState state;
  double migd_value = std::numeric_limits<double>::quiet_NaN();
  double mhv_value = std::numeric_limits<double>::quiet_NaN();
};

// Prepares the dynamic state: N0-point initial design over the decision box
// evaluated at the first environment time (never at future times), fresh
// model, empty FIFO window.
inline DynamicRunState init_dynamic_state(const RunConfig& cfg, ParametricProblem& problem,
                                          const RandomSource& root) {
  DynamicRunState state;
  state.window = EvaluationArchive(200);
  RandomSource rng_init = root.split("init");
  RandomSource rng_model = root.split("model-init");

  const double t0 = time_index(cfg.dynamic, 0);
  Vec t0v(1);
  t0v[0] = t0;
  const int n_init = cfg.resolved_n_init(problem.decision_dim(), 1);
  if (n_init > 0) {
    for (auto& [x, t] : space_filling_init(rng_init, n_init, problem.decision_box(),
                                           Box(t0v, t0v))) {
      ObjectiveVector y = problem.evaluate(x, t);
      state.window.push(x, t, y);
      state.log.push_back({{std::move(x), std::move(t), std::move(y)}, 0,
                           problem.evaluation_count()});
    }
  }
  state.model = ParametricPsModel::init(model_config_for(cfg, problem), rng_model);
  return state;
}

// Full dynamic loop: one generation per clock tick under the configured
// ablation mode.
inline DynamicRunResult run_dynamic(const RunConfig& cfg) {
  if (cfg.mode != RunMode::dynamic_mode)
    throw std::invalid_argument("run_dynamic: config not dynamic");
  cfg.train.validate();
  cfg.dynamic.validate();
  ProblemPtr problem = build_problem(cfg);
  if (problem->parameter_dim() != 1)
    throw std::invalid_argument("run_dynamic: dynamic problems take a scalar time parameter");

  DynamicRunResult result;
  result.problem = problem;
  RandomSource root(cfg.seed);
  result.state = init_dynamic_state(cfg, *problem, root);
  DynamicRunState& state = result.state;

  while (step_generation(state, *problem, cfg, root)) {
  }

  std::vector<double> igds;
  std::vector<std::vector<Vec>> fronts;
  std::vector<Vec> refs;
  for (std::size_t i = 0; i < state.traces.size(); ++i) {
    if (std::isfinite(state.traces[i].igd_value)) igds.push_back(state.traces[i].igd_value);
    if (problem->has_analytic_front()) {
      Vec tv(1);
      tv[0] = state.traces[i].t_env;
      fronts.push_back(state.step_fronts[i]);
      refs.push_back(mhv_reference(problem->analytic_front(TaskParameter(tv), cfg.igd_reference_points)));
    }
  }
  if (!igds.empty()) result.migd_value = migd(igds);
  if (!fronts.empty()) result.mhv_value = mhv(fronts, refs);
  return result;
}

}  // namespace ppsl
