#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstddef>
#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

namespace ppsl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Axis-aligned box [lb, ub] in R^dim. dim may be zero (problems without a
// task parameter).
struct Box {
  Vec lb;
  Vec ub;

  Box() = default;
  Box(Vec lower, Vec upper) : lb(std::move(lower)), ub(std::move(upper)) {
    if (lb.size() != ub.size()) throw std::invalid_argument("Box: lb/ub size mismatch");
    for (Eigen::Index i = 0; i < lb.size(); ++i)
      if (!(lb[i] <= ub[i])) throw std::invalid_argument("Box: lb > ub at dim " + std::to_string(i));
  }

  static Box unit(int dim) { return Box(Vec::Zero(dim), Vec::Ones(dim)); }

  int dim() const { return static_cast<int>(lb.size()); }

  bool contains(const Vec& x, double tol = 1e-9) const {
    if (x.size() != lb.size()) return false;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (x[i] < lb[i] - tol || x[i] > ub[i] + tol) return false;
    return true;
  }

  Vec span() const { return ub - lb; }
};

// Point on the (m-1)-simplex; encodes a trade-off among m objectives.
struct PreferenceVector {
  Vec weights;

  PreferenceVector() = default;
  explicit PreferenceVector(Vec w) : weights(std::move(w)) {
    if (weights.size() < 1) throw std::invalid_argument("PreferenceVector: empty");
    for (Eigen::Index i = 0; i < weights.size(); ++i)
      if (weights[i] < 0.0) throw std::invalid_argument("PreferenceVector: negative component");
    if (std::abs(weights.sum() - 1.0) > 1e-9)
      throw std::invalid_argument("PreferenceVector: components must sum to 1");
  }

  int dim() const { return static_cast<int>(weights.size()); }
};

// Exogenous context vector t (shared-component values or normalized time).
struct TaskParameter {
  Vec values;

  TaskParameter() : values(Vec(0)) {}
  explicit TaskParameter(Vec v) : values(std::move(v)) {}

  int dim() const { return static_cast<int>(values.size()); }
};

struct DecisionVector {
  Vec values;

  DecisionVector() = default;
  explicit DecisionVector(Vec v) : values(std::move(v)) {}

  int dim() const { return static_cast<int>(values.size()); }
};

struct ObjectiveVector {
  Vec values;

  ObjectiveVector() = default;
  explicit ObjectiveVector(Vec v) : values(std::move(v)) {
    for (Eigen::Index i = 0; i < values.size(); ++i)
      if (!std::isfinite(values[i])) throw std::invalid_argument("ObjectiveVector: non-finite component");
  }

  int dim() const { return static_cast<int>(values.size()); }
};

struct EvaluationRecord {
  DecisionVector x;
  TaskParameter t;
  ObjectiveVector y;
};

// Ordered archive of expensive evaluations. An optional capacity turns it
// into a first-in-first-out window (oldest records dropped first).
class EvaluationArchive {
 public:
  EvaluationArchive() = default;
  explicit EvaluationArchive(std::size_t capacity) : capacity_(capacity) {}

  void push(EvaluationRecord rec) {
    if (!records_.empty()) {
      const auto& r0 = records_.front();
      if (rec.x.dim() != r0.x.dim() || rec.t.dim() != r0.t.dim() || rec.y.dim() != r0.y.dim())
        throw std::invalid_argument("EvaluationArchive: inconsistent record dimensions");
    }
    records_.push_back(std::move(rec));
    if (capacity_ && records_.size() > *capacity_) records_.pop_front();
  }

  void push(DecisionVector x, TaskParameter t, ObjectiveVector y) {
    push(EvaluationRecord{std::move(x), std::move(t), std::move(y)});
  }

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::optional<std::size_t> capacity() const { return capacity_; }

  const EvaluationRecord& operator[](std::size_t i) const { return records_[i]; }
  auto begin() const { return records_.begin(); }
  auto end() const { return records_.end(); }

  std::vector<Vec> objectives() const {
    std::vector<Vec> out;
    out.reserve(records_.size());
    for (const auto& r : records_) out.push_back(r.y.values);
    return out;
  }

 private:
  std::deque<EvaluationRecord> records_;
  std::optional<std::size_t> capacity_;
};

}  // namespace ppsl
