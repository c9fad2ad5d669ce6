#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "ppsl/gp.hpp"
#include "ppsl/rng.hpp"
#include "ppsl/types.hpp"

namespace ppsl {

// Independent GP per objective over the augmented input z = [x, t]. Inputs
// are min-max scaled to the unit cube using the declared problem boxes (not
// data ranges), so predictions stay stable as the archive grows.
class GaussianSurrogate {
 public:
  GaussianSurrogate() = default;

  static GaussianSurrogate fit(const EvaluationArchive& archive, const Box& decision_box,
                               const Box& parameter_box, const GpConfig& cfg, RandomSource rng,
                               const GaussianSurrogate* warm_start = nullptr) {
    if (archive.size() < 2) throw std::invalid_argument("surrogate fit: archive needs >= 2 records");
    const int n = decision_box.dim();
    const int p = parameter_box.dim();
    const int m = archive[0].y.dim();
    if (archive[0].x.dim() != n || archive[0].t.dim() != p)
      throw std::invalid_argument("surrogate fit: archive dimensions do not match boxes");

    GaussianSurrogate s;
    s.decision_box_ = decision_box;
    s.parameter_box_ = parameter_box;

    const Eigen::Index count = static_cast<Eigen::Index>(archive.size());
    Mat z(count, n + p);
    Mat y(count, m);
    Eigen::Index row = 0;
    for (const auto& rec : archive) {
      z.row(row) = s.scale_input(rec.x.values, rec.t.values).transpose();
      y.row(row) = rec.y.values.transpose();
      ++row;
    }

    s.models_.reserve(m);
    for (int i = 0; i < m; ++i) {
      const GpHyperparameters* warm =
          warm_start && static_cast<int>(warm_start->models_.size()) == m
              ? &warm_start->models_[i].hyper()
              : nullptr;
      s.models_.push_back(GpModel::fit(cfg.kernel, z, y.col(i),
                                       cfg, rng.split("objective-" + std::to_string(i)), warm));
    }
    return s;
  }

  static GaussianSurrogate from_models(std::vector<GpModel> models, Box decision_box,
                                       Box parameter_box) {
    GaussianSurrogate s;
    s.models_ = std::move(models);
    s.decision_box_ = std::move(decision_box);
    s.parameter_box_ = std::move(parameter_box);
    return s;
  }

  bool fitted() const { return !models_.empty(); }
  int num_objectives() const { return static_cast<int>(models_.size()); }
  const std::vector<GpModel>& models() const { return models_; }
  const Box& decision_box() const { return decision_box_; }
  const Box& parameter_box() const { return parameter_box_; }

  std::pair<ObjectiveVector, Vec> posterior(const DecisionVector& x, const TaskParameter& t) const {
    require_fitted();
    const Vec z = scale_input(x.values, t.values);
    const int m = num_objectives();
    Vec mean(m), stdev(m);
    for (int i = 0; i < m; ++i) {
      double mu, var;
      models_[i].posterior(z, mu, var);
      mean[i] = mu;
      stdev[i] = std::sqrt(std::max(0.0, var));
    }
    return {ObjectiveVector(std::move(mean)), std::move(stdev)};
  }

  // Componentwise lower confidence bound mu - beta * sigma.
  ObjectiveVector lcb(const DecisionVector& x, const TaskParameter& t, double beta) const {
    if (beta < 0.0) throw std::invalid_argument("lcb: beta must be non-negative");
    auto [mean, stdev] = posterior(x, t);
    return ObjectiveVector(mean.values - beta * stdev);
  }

  // LCB values plus their gradients with respect to the decision variables
  // (m x n, raw units). The std gradient uses d sigma = d var / (2 sigma)
  // with sigma floored at 1e-9 to avoid the singularity at training points.
  std::pair<Vec, Mat> lcb_value_grad(const DecisionVector& x, const TaskParameter& t,
                                     double beta) const {
    if (beta < 0.0) throw std::invalid_argument("lcb: beta must be non-negative");
    require_fitted();
    const Vec z = scale_input(x.values, t.values);
    const int m = num_objectives();
    const int n = decision_box_.dim();
    // chain rule through the unit-cube scaling, decision dims only
    Vec dscale(n);
    for (int j = 0; j < n; ++j) {
      const double span = decision_box_.ub[j] - decision_box_.lb[j];
      dscale[j] = span > 0.0 ? 1.0 / span : 0.0;
    }
    Vec value(m);
    Mat grad(m, n);
    for (int i = 0; i < m; ++i) {
      double mu, var;
      Vec dmu, dvar;
      models_[i].posterior_grad(z, mu, var, dmu, dvar);
      const double sigma = std::sqrt(std::max(0.0, var));
      const double sigma_floor = std::max(sigma, 1e-9);
      value[i] = mu - beta * sigma;
      const Vec dsigma = dvar / (2.0 * sigma_floor);
      grad.row(i) =
          ((dmu.head(n) - beta * dsigma.head(n)).cwiseProduct(dscale)).transpose();
    }
    return {std::move(value), std::move(grad)};
  }

  Vec scale_input(const Vec& x, const Vec& t) const {
    const int n = decision_box_.dim();
    const int p = parameter_box_.dim();
    Vec z(n + p);
    for (int j = 0; j < n; ++j) {
      const double span = decision_box_.ub[j] - decision_box_.lb[j];
      z[j] = span > 0.0 ? (x[j] - decision_box_.lb[j]) / span : 0.0;
    }
    for (int j = 0; j < p; ++j) {
      const double span = parameter_box_.ub[j] - parameter_box_.lb[j];
      z[n + j] = span > 0.0 ? (t[j] - parameter_box_.lb[j]) / span : 0.0;
    }
    return z;
  }

 private:
  void require_fitted() const {
    if (!fitted()) throw std::logic_error("GaussianSurrogate: not fitted");
  }

  std::vector<GpModel> models_;
  Box decision_box_;
  Box parameter_box_;
};

}  // namespace ppsl
