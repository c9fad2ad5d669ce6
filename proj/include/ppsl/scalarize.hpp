#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "ppsl/types.hpp"

namespace ppsl {

// Ideal point z* with stability shift: losses measure distances to
// z* - epsilon componentwise.
struct IdealPoint {
  Vec z_star;
  double epsilon = 1e-3;

  IdealPoint() = default;
  IdealPoint(Vec z, double eps) : z_star(std::move(z)), epsilon(eps) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("IdealPoint: epsilon must be > 0");
  }

  Vec effective() const { return z_star.array() - epsilon; }
};

struct StchConfig {
  double nu = 0.01;

  void validate() const {
    if (!(nu > 0.0)) throw std::invalid_argument("StchConfig: nu must be > 0");
  }
};

// Tchebycheff scalarization: max_i lambda_i * (f_i - (z_i* - eps)).
inline double tch(const Vec& f, const PreferenceVector& lambda, const IdealPoint& ideal) {
  if (f.size() != lambda.weights.size() || f.size() != ideal.z_star.size())
    throw std::invalid_argument("tch: dimension mismatch");
  return (lambda.weights.array() * (f.array() - ideal.effective().array())).maxCoeff();
}

namespace detail {

// y_i = lambda_i * (f_i - (z_i* - eps)); the shifted values feeding the
// log-sum-exp, stabilized around max_i y_i.
inline std::pair<Vec, double> stch_terms(const Vec& f, const PreferenceVector& lambda,
                                         const IdealPoint& ideal) {
  if (f.size() != lambda.weights.size() || f.size() != ideal.z_star.size())
    throw std::invalid_argument("stch: dimension mismatch");
  Vec y = lambda.weights.array() * (f.array() - ideal.effective().array());
  const double y_max = y.maxCoeff();
  return {std::move(y), y_max};
}

}  // namespace detail

// Smooth Tchebycheff: nu * log sum_j exp(y_j / nu), evaluated in the
// log-sum-exp stabilized form y~ + nu * log sum exp((y_j - y~)/nu).
inline double stch(const Vec& f, const PreferenceVector& lambda, const IdealPoint& ideal,
                   const StchConfig& cfg) {
  cfg.validate();
  auto [y, y_max] = detail::stch_terms(f, lambda, ideal);
  const double s = ((y.array() - y_max) / cfg.nu).exp().sum();
  return y_max + cfg.nu * std::log(s);
}

// Gradient of stch with respect to f: w_i = lambda_i * softmax_i(y/nu).
inline Vec stch_grad_f(const Vec& f, const PreferenceVector& lambda, const IdealPoint& ideal,
                       const StchConfig& cfg) {
  cfg.validate();
  auto [y, y_max] = detail::stch_terms(f, lambda, ideal);
  const Vec e = ((y.array() - y_max) / cfg.nu).exp();
  return lambda.weights.array() * (e.array() / e.sum());
}

// Surrogate STCH loss over the LCB objectives plus its exact gradient with
// respect to x: grad = sum_i w_i * d lcb_i / dx. Model must provide
// lcb_value_grad(x, t, beta) -> (values m, gradients m x n).
template <typename SurrogateModel>
std::pair<double, Vec> surrogate_stch(const DecisionVector& x, const TaskParameter& t,
                                      const PreferenceVector& lambda, const IdealPoint& ideal,
                                      const StchConfig& cfg, const SurrogateModel& model,
                                      double beta) {
  auto [f_hat, df_dx] = model.lcb_value_grad(x, t, beta);
  const double value = stch(f_hat, lambda, ideal, cfg);
  const Vec w = stch_grad_f(f_hat, lambda, ideal, cfg);
  return {value, Vec(df_dx.transpose() * w)};
}

// Running componentwise minimum of observed objectives.
inline IdealPoint update_ideal(const EvaluationArchive& archive, double epsilon = 1e-3) {
  if (archive.empty()) throw std::logic_error("update_ideal: empty archive");
  Vec z = archive[0].y.values;
  for (const auto& rec : archive) z = z.cwiseMin(rec.y.values);
  return IdealPoint(std::move(z), epsilon);
}

}  // namespace ppsl
