#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ppsl/dominance.hpp"
#include "ppsl/types.hpp"

namespace ppsl {

// A family of multi-objective problems indexed by a task parameter t.
// evaluate() is the expensive, budget-counted entry point; evaluate_audit()
// tracks metric-only evaluations on a separate counter so budget accounting
// stays honest.
class ParametricProblem {
 public:
  ParametricProblem(std::string name, Box decision_box, Box parameter_box, int num_objectives)
      : name_(std::move(name)),
        decision_box_(std::move(decision_box)),
        parameter_box_(std::move(parameter_box)),
        num_objectives_(num_objectives) {
    if (num_objectives_ < 2) throw std::invalid_argument("ParametricProblem: m must be >= 2");
  }
  virtual ~ParametricProblem() = default;

  const std::string& name() const { return name_; }
  int decision_dim() const { return decision_box_.dim(); }
  int parameter_dim() const { return parameter_box_.dim(); }
  int num_objectives() const { return num_objectives_; }
  const Box& decision_box() const { return decision_box_; }
  const Box& parameter_box() const { return parameter_box_; }

  ObjectiveVector evaluate(const DecisionVector& x, const TaskParameter& t) {
    check_domain(x, t);
    Vec y = eval_impl(x.values, t.values, /*audit=*/false);
    evaluations_.fetch_add(1, std::memory_order_relaxed);
    return ObjectiveVector(std::move(y));
  }

  ObjectiveVector evaluate_audit(const DecisionVector& x, const TaskParameter& t) {
    check_domain(x, t);
    Vec y = eval_impl(x.values, t.values, /*audit=*/true);
    audits_.fetch_add(1, std::memory_order_relaxed);
    return ObjectiveVector(std::move(y));
  }

  long evaluation_count() const { return evaluations_.load(std::memory_order_relaxed); }
  long audit_count() const { return audits_.load(std::memory_order_relaxed); }

  virtual bool has_analytic_front() const { return false; }

  // k points spread along the closed-form Pareto front at parameter t.
  virtual std::vector<ObjectiveVector> analytic_front(const TaskParameter&, int) const {
    throw std::runtime_error("analytic_front: unsupported for problem '" + name_ + "'");
  }

 protected:
  virtual Vec eval_impl(const Vec& x, const Vec& t, bool audit) const = 0;

 private:
  void check_domain(const DecisionVector& x, const TaskParameter& t) const {
    if (!decision_box_.contains(x.values))
      throw std::domain_error("evaluate: decision vector outside the decision box");
    if (!parameter_box_.contains(t.values))
      throw std::domain_error("evaluate: task parameter outside the parameter box");
  }

  std::string name_;
  Box decision_box_;
  Box parameter_box_;
  int num_objectives_;
  std::atomic<long> evaluations_{0};
  std::atomic<long> audits_{0};
};

using ProblemPtr = std::shared_ptr<ParametricProblem>;

namespace detail {

// Grid of k values covering [0, 1]; k = 1 yields the midpoint.
inline std::vector<double> unit_grid(int k) {
  if (k < 1) throw std::invalid_argument("unit_grid: k must be >= 1");
  std::vector<double> g(k);
  if (k == 1) {
    g[0] = 0.5;
  } else {
    for (int i = 0; i < k; ++i) g[i] = static_cast<double>(i) / (k - 1);
  }
  return g;
}

}  // namespace detail

// synth-P1 "param-biconvex": n=2, x in [0,1]^2, t in [0,1], m=2.
//   g(x2,t) = 1 + t + (x2 - t)^2
//   f1 = x1,  f2 = g * (1 - sqrt(x1/g))
// Pareto set x2 = t; front f2 = (1+t) - sqrt(f1*(1+t)), f1 in [0,1].
class SynthP1 : public ParametricProblem {
 public:
  SynthP1() : ParametricProblem("synth-p1", Box::unit(2), Box::unit(1), 2) {}

  bool has_analytic_front() const override { return true; }

  std::vector<ObjectiveVector> analytic_front(const TaskParameter& t, int k) const override {
    const double s = 1.0 + t.values[0];
    std::vector<ObjectiveVector> out;
    for (double u : detail::unit_grid(k)) {
      Vec f(2);
      f << u, s - std::sqrt(u * s);
      out.emplace_back(std::move(f));
    }
    return out;
  }

 protected:
  Vec eval_impl(const Vec& x, const Vec& t, bool) const override {
    const double g = 1.0 + t[0] + (x[1] - t[0]) * (x[1] - t[0]);
    Vec f(2);
    f << x[0], g * (1.0 - std::sqrt(x[0] / g));
    return f;
  }
};

// synth-P2 "param-triobj": n=3, m=3, t in [0,1].
//   g(x3,t) = (x3 - t)^2,  s = (1+t)*(1+g)
//   f1 = s*cos(x1*pi/2)*cos(x2*pi/2)
//   f2 = s*cos(x1*pi/2)*sin(x2*pi/2)
//   f3 = s*sin(x1*pi/2)
// Pareto set x3 = t (g=0); front is the radius-(1+t) sphere octant
// f1^2+f2^2+f3^2 = (1+t)^2 with all f_i >= 0.
class SynthP2 : public ParametricProblem {
 public:
  SynthP2() : ParametricProblem("synth-p2", Box::unit(3), Box::unit(1), 3) {}

  bool has_analytic_front() const override { return true; }

  std::vector<ObjectiveVector> analytic_front(const TaskParameter& t, int k) const override {
    const double s = 1.0 + t.values[0];
    const int side = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(k)))));
    const auto grid = detail::unit_grid(side);
    std::vector<ObjectiveVector> out;
    out.reserve(k);
    for (double a : grid) {
      for (double b : grid) {
        if (static_cast<int>(out.size()) == k) return out;
        Vec f(3);
        f << s * std::cos(a * M_PI_2) * std::cos(b * M_PI_2),
            s * std::cos(a * M_PI_2) * std::sin(b * M_PI_2), s * std::sin(a * M_PI_2);
        out.emplace_back(std::move(f));
      }
    }
    return out;
  }

 protected:
  Vec eval_impl(const Vec& x, const Vec& t, bool) const override {
    const double g = (x[2] - t[0]) * (x[2] - t[0]);
    const double s = (1.0 + t[0]) * (1.0 + g);
    Vec f(3);
    f << s * std::cos(x[0] * M_PI_2) * std::cos(x[1] * M_PI_2),
        s * std::cos(x[0] * M_PI_2) * std::sin(x[1] * M_PI_2), s * std::sin(x[0] * M_PI_2);
    return f;
  }
};

// synth-D1 "dyn-shift": n variables in [0,1]^n, m=2, t = normalized time.
//   G(t) = sin(0.5*pi*t)
//   g = 1 + sum_{i>=2} (x_i - G(t))^2
//   f1 = x1,  f2 = g * (1 - sqrt(x1/g))
// Pareto set x_i = G(t) for i >= 2; front f2 = 1 - sqrt(f1) for every t.
class SynthD1 : public ParametricProblem {
 public:
  explicit SynthD1(int n = 10) : ParametricProblem("synth-d1", Box::unit(n), Box::unit(1), 2) {
    if (n < 2) throw std::invalid_argument("SynthD1: n must be >= 2");
  }

  bool has_analytic_front() const override { return true; }

  std::vector<ObjectiveVector> analytic_front(const TaskParameter&, int k) const override {
    std::vector<ObjectiveVector> out;
    for (double u : detail::unit_grid(k)) {
      Vec f(2);
      f << u, 1.0 - std::sqrt(u);
      out.emplace_back(std::move(f));
    }
    return out;
  }

 protected:
  Vec eval_impl(const Vec& x, const Vec& t, bool) const override {
    const double G = std::sin(0.5 * M_PI * t[0]);
    double g = 1.0;
    for (Eigen::Index i = 1; i < x.size(); ++i) g += (x[i] - G) * (x[i] - G);
    Vec f(2);
    f << x[0], g * (1.0 - std::sqrt(x[0] / g));
    return f;
  }
};

// Plugin problem: dimensions, boxes and an evaluate callback supplied by the
// caller; no analytic front.
class CallbackProblem : public ParametricProblem {
 public:
  using EvalFn = std::function<Vec(const Vec& x, const Vec& t)>;

  CallbackProblem(std::string name, Box decision_box, Box parameter_box, int m, EvalFn fn)
      : ParametricProblem(std::move(name), std::move(decision_box), std::move(parameter_box), m),
        fn_(std::move(fn)) {
    if (!fn_) throw std::invalid_argument("CallbackProblem: null evaluate callback");
  }

 protected:
  Vec eval_impl(const Vec& x, const Vec& t, bool) const override { return fn_(x, t); }

 private:
  EvalFn fn_;
};

// Shared-component wrapper (base variables split into a shared part acting
// as the task parameter and a free part acting as the decision vector).
struct SharedComponentSpec {
  ProblemPtr base;
  std::vector<int> shared_indices;
};

class SharedComponentProblem : public ParametricProblem {
 public:
  SharedComponentProblem(ProblemPtr base, std::vector<int> shared, std::vector<int> free_idx)
      : ParametricProblem("shared:" + base->name(),
                          subset_box(base->decision_box(), free_idx),
                          subset_box(base->decision_box(), shared), base->num_objectives()),
        base_(std::move(base)),
        shared_(std::move(shared)),
        free_(std::move(free_idx)) {}

  const ProblemPtr& base() const { return base_; }
  const std::vector<int>& shared_indices() const { return shared_; }
  const std::vector<int>& free_indices() const { return free_; }

  // Reassembles the base decision vector from (free part, shared part).
  Vec merge(const Vec& x_free, const Vec& shared_values) const {
    Vec full(base_->decision_dim());
    for (std::size_t i = 0; i < free_.size(); ++i) full[free_[i]] = x_free[i];
    for (std::size_t i = 0; i < shared_.size(); ++i) full[shared_[i]] = shared_values[i];
    return full;
  }

 protected:
  Vec eval_impl(const Vec& x, const Vec& t, bool audit) const override {
    DecisionVector full(merge(x, t));
    TaskParameter none;
    return audit ? base_->evaluate_audit(full, none).values : base_->evaluate(full, none).values;
  }

 private:
  static Box subset_box(const Box& b, const std::vector<int>& idx) {
    Vec lb(idx.size()), ub(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      lb[i] = b.lb[idx[i]];
      ub[i] = b.ub[idx[i]];
    }
    return Box(std::move(lb), std::move(ub));
  }

  ProblemPtr base_;
  std::vector<int> shared_;
  std::vector<int> free_;
};

inline std::shared_ptr<SharedComponentProblem> wrap_shared(const SharedComponentSpec& spec) {
  if (!spec.base) throw std::invalid_argument("wrap_shared: null base problem");
  if (spec.base->parameter_dim() != 0)
    throw std::invalid_argument("wrap_shared: base problem must not itself be parametric");
  const int n_total = spec.base->decision_dim();
  std::vector<bool> is_shared(n_total, false);
  for (int i : spec.shared_indices) {
    if (i < 0 || i >= n_total) throw std::invalid_argument("wrap_shared: shared index out of range");
    if (is_shared[i]) throw std::invalid_argument("wrap_shared: duplicate shared index");
    is_shared[i] = true;
  }
  std::vector<int> free_idx;
  for (int i = 0; i < n_total; ++i)
    if (!is_shared[i]) free_idx.push_back(i);
  if (spec.shared_indices.empty() || free_idx.empty())
    throw std::invalid_argument("wrap_shared: shared and free sets must both be non-empty");
  return std::make_shared<SharedComponentProblem>(spec.base, spec.shared_indices, free_idx);
}

// Dynamic benchmark clock: severity n_t, change frequency tau_t (in
// generations), T_max total generations.
struct DynamicSpec {
  int n_t = 10;
  int tau_t = 2;
  int t_max = 42;

  void validate() const {
    if (n_t < 1 || tau_t < 1 || t_max < tau_t) throw std::invalid_argument("DynamicSpec: invalid fields");
  }
};

// Normalized benchmark time t = (1/n_t) * floor(tau / tau_t).
inline double time_index(const DynamicSpec& spec, int tau) {
  spec.validate();
  if (tau < 0 || tau > spec.t_max) throw std::invalid_argument("time_index: tau outside [0, T_max]");
  return static_cast<double>(tau / spec.tau_t) / spec.n_t;
}

// Registry of named problem factories; plugin problems register here and
// become loadable from CLI configs.
using ProblemFactory = std::function<ProblemPtr(const std::map<std::string, double>&)>;

inline std::map<std::string, ProblemFactory>& problem_registry() {
  static std::map<std::string, ProblemFactory> reg = {
      {"synth-p1", [](const auto&) { return std::make_shared<SynthP1>(); }},
      {"synth-p2", [](const auto&) { return std::make_shared<SynthP2>(); }},
      {"synth-d1",
       [](const std::map<std::string, double>& p) {
         const auto it = p.find("n");
         return std::make_shared<SynthD1>(it == p.end() ? 10 : static_cast<int>(it->second));
       }},
  };
  return reg;
}

inline void register_problem(const std::string& name, ProblemFactory factory) {
  problem_registry()[name] = std::move(factory);
}

inline ProblemPtr make_problem(const std::string& name,
                               const std::map<std::string, double>& params = {}) {
  const auto& reg = problem_registry();
  const auto it = reg.find(name);
  if (it == reg.end()) throw std::invalid_argument("make_problem: unknown problem '" + name + "'");
  return it->second(params);
}

}  // namespace ppsl
