#pragma once

#include <utility>
#include <vector>

#include "ppsl/psmodel.hpp"
#include "ppsl/rng.hpp"
#include "ppsl/types.hpp"

namespace ppsl::testing {

// Smooth analytic surrogate stand-in with exact gradients: two quadratic
// bowls whose centers move with t. Mимics the lcb_value_grad interface.
struct QuadraticSurrogate {
  int n = 2;

  std::pair<Vec, Mat> lcb_value_grad(const DecisionVector& x, const TaskParameter& t,
                                     double /*beta*/) const {
    const double tv = t.values.size() ? t.values[0] : 0.0;
    Vec c1 = Vec::Constant(n, 0.25 + 0.5 * tv);
    Vec c2 = Vec::Constant(n, 0.75 - 0.5 * tv);
    Vec value(2);
    value << (x.values - c1).squaredNorm(), (x.values - c2).squaredNorm() + 0.1;
    Mat grad(2, n);
    grad.row(0) = 2.0 * (x.values - c1).transpose();
    grad.row(1) = 2.0 * (x.values - c2).transpose();
    return {std::move(value), std::move(grad)};
  }

  ObjectiveVector lcb(const DecisionVector& x, const TaskParameter& t, double beta) const {
    return ObjectiveVector(lcb_value_grad(x, t, beta).first);
  }
};

// Tiny model from the gradient-correctness protocol: PS layers 2 -> 4 -> 2
// with rank 1, hypernetwork 1 -> 8 -> output. Optionally randomizes the
// hypernetwork output layer so gradients flow into every hypernet layer.
inline ParametricPsModel tiny_model(std::uint64_t seed, bool randomize_hn_output) {
  ModelConfig cfg;
  cfg.pref_dim = 2;
  cfg.decision_box = Box::unit(2);
  cfg.task_dim = 1;
  cfg.ps_hidden = {4};
  cfg.hn_hidden = {8};
  cfg.rank = 1;
  RandomSource rng(seed);
  ParametricPsModel model = ParametricPsModel::init(cfg, rng);
  if (randomize_hn_output) {
    auto& w = model.mutable_hypernet().weights();
    for (Eigen::Index i = 0; i < w.w.back().rows(); ++i) {
      for (Eigen::Index j = 0; j < w.w.back().cols(); ++j)
        w.w.back()(i, j) = rng.uniform(-0.3, 0.3);
      w.b.back()[i] = rng.uniform(-0.1, 0.1);
    }
  }
  return model;
}

// Mutable references to every trainable coordinate (base first, then
// hypernetwork), in a fixed traversal order.
inline std::vector<double*> parameter_refs(ParametricPsModel& model) {
  std::vector<double*> refs;
  auto collect = [&refs](MlpWeights& weights) {
    for (auto& w : weights.w)
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) refs.push_back(&w(i, j));
    for (auto& b : weights.b)
      for (Eigen::Index i = 0; i < b.size(); ++i) refs.push_back(&b[i]);
  };
  collect(model.mutable_base_weights());
  collect(model.mutable_hypernet().weights());
  return refs;
}

// Gradient coordinates in the same traversal order as parameter_refs.
inline std::vector<double> gradient_values(const PsGradients& grads) {
  std::vector<double> out;
  auto collect = [&out](const MlpWeights& weights) {
    for (const auto& w : weights.w)
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) out.push_back(w(i, j));
    for (const auto& b : weights.b)
      for (Eigen::Index i = 0; i < b.size(); ++i) out.push_back(b[i]);
  };
  collect(grads.base);
  collect(grads.hypernet);
  return out;
}

inline std::size_t base_parameter_count(const ParametricPsModel& model) {
  std::size_t count = 0;
  for (const auto& w : model.base_weights().w) count += w.size();
  for (const auto& b : model.base_weights().b) count += b.size();
  return count;
}

inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace ppsl::testing
