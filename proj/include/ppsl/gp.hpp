#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppsl/rng.hpp"
#include "ppsl/types.hpp"

namespace ppsl {

enum class KernelKind { squared_exponential, matern52 };

inline KernelKind kernel_from_string(const std::string& s) {
  if (s == "squared_exponential" || s == "se" || s == "rbf") return KernelKind::squared_exponential;
  if (s == "matern52") return KernelKind::matern52;
  throw std::invalid_argument("unknown kernel '" + s + "'");
}

inline std::string to_string(KernelKind k) {
  return k == KernelKind::squared_exponential ? "squared_exponential" : "matern52";
}

// ARD hyperparameters. Lengthscales are per input dimension of the scaled
// augmented space; constant_mean lives in standardized target units.
struct GpHyperparameters {
  Vec lengthscales;
  double signal_variance = 1.0;
  double noise_variance = 1e-6;
  double constant_mean = 0.0;

  void validate() const {
    for (Eigen::Index i = 0; i < lengthscales.size(); ++i)
      if (!(lengthscales[i] > 0.0)) throw std::invalid_argument("GpHyperparameters: lengthscale <= 0");
    if (!(signal_variance > 0.0) || !(noise_variance > 0.0))
      throw std::invalid_argument("GpHyperparameters: variance <= 0");
  }
};

struct GpConfig {
  KernelKind kernel = KernelKind::squared_exponential;
  double noise_variance = 1e-6;
  bool learn_noise = false;
  int mll_steps = 200;
  double mll_step_size = 0.05;
  int restarts = 3;
};

struct GpFitReport {
  std::vector<double> start_mll;  // one per optimization trajectory
  double final_mll = 0.0;
};

namespace detail {

// Cholesky with diagonal jitter escalation 1e-10 -> 1e-4 (x10 per retry).
inline std::pair<Mat, double> chol_with_jitter(const Mat& k_matrix) {
  Eigen::LLT<Mat> llt(k_matrix);
  if (llt.info() == Eigen::Success) return {Mat(llt.matrixL()), 0.0};
  for (double jitter = 1e-10; jitter <= 1e-4 * (1.0 + 1e-12); jitter *= 10.0) {
    Mat kj = k_matrix;
    kj.diagonal().array() += jitter;
    llt.compute(kj);
    if (llt.info() == Eigen::Success) return {Mat(llt.matrixL()), jitter};
  }
  throw std::runtime_error("GP fit: kernel matrix not positive definite after maximum jitter");
}

}  // namespace detail

// Gaussian process over one objective, in scaled-input / standardized-target
// space. Exact inference via Cholesky.
class GpModel {
 public:
  GpModel() = default;

  // Builds the model from explicit hyperparameters and training data
  // (targets in raw objective units).
  GpModel(KernelKind kind, GpHyperparameters hyper, Mat inputs, const Vec& targets_raw)
      : kind_(kind), hyper_(std::move(hyper)), z_(std::move(inputs)) {
    hyper_.validate();
    if (z_.rows() != targets_raw.size()) throw std::invalid_argument("GpModel: input/target size mismatch");
    y_mean_ = targets_raw.mean();
    const double var = (targets_raw.array() - y_mean_).square().mean();
    y_sd_ = var > 1e-24 ? std::sqrt(var) : 1.0;
    y_std_ = (targets_raw.array() - y_mean_) / y_sd_;
    factorize();
  }

  static GpModel fit(KernelKind kind, const Mat& inputs, const Vec& targets_raw, const GpConfig& cfg,
                     RandomSource rng, const GpHyperparameters* warm_start = nullptr,
                     GpFitReport* report = nullptr);

  bool fitted() const { return z_.rows() > 0; }
  const GpHyperparameters& hyper() const { return hyper_; }
  KernelKind kernel() const { return kind_; }
  const Mat& train_inputs() const { return z_; }
  Vec train_targets_raw() const { return (y_std_.array() * y_sd_ + y_mean_).matrix(); }
  double target_mean() const { return y_mean_; }
  double target_sd() const { return y_sd_; }
  double jitter() const { return jitter_; }

  // Posterior mean/variance in raw objective units at a scaled input.
  void posterior(const Vec& z, double& mean, double& var) const {
    require_fitted();
    const Vec k = kernel_vector(z);
    const Vec v = chol_l_.triangularView<Eigen::Lower>().solve(k);
    const double mean_std = hyper_.constant_mean + k.dot(alpha_);
    const double var_std = std::max(0.0, hyper_.signal_variance - v.squaredNorm());
    mean = y_mean_ + y_sd_ * mean_std;
    var = y_sd_ * y_sd_ * var_std;
  }

  // Gradients of posterior mean and variance (raw units) with respect to the
  // scaled input coordinates.
  void posterior_grad(const Vec& z, double& mean, double& var, Vec& dmean, Vec& dvar) const {
    require_fitted();
    const Vec k = kernel_vector(z);
    const Vec v = chol_l_.triangularView<Eigen::Lower>().solve(k);
    const Vec kinv_k = chol_l_.transpose().triangularView<Eigen::Upper>().solve(v);
    const Mat dk = kernel_vector_grad(z);  // D x N
    mean = y_mean_ + y_sd_ * (hyper_.constant_mean + k.dot(alpha_));
    var = y_sd_ * y_sd_ * std::max(0.0, hyper_.signal_variance - v.squaredNorm());
    dmean = y_sd_ * (dk * alpha_);
    dvar = y_sd_ * y_sd_ * (-2.0 * (dk * kinv_k));
  }

  double log_marginal_likelihood() const {
    require_fitted();
    const double n = static_cast<double>(z_.rows());
    return -0.5 * (y_std_.array() - hyper_.constant_mean).matrix().dot(alpha_) -
           chol_l_.diagonal().array().log().sum() - 0.5 * n * std::log(2.0 * M_PI);
  }

  double kernel_value(const Vec& a, const Vec& b) const {
    const Vec d = (a - b).cwiseQuotient(hyper_.lengthscales);
    const double r2 = d.squaredNorm();
    if (kind_ == KernelKind::squared_exponential) return hyper_.signal_variance * std::exp(-0.5 * r2);
    const double r = std::sqrt(r2);
    const double s5r = std::sqrt(5.0) * r;
    return hyper_.signal_variance * (1.0 + s5r + 5.0 / 3.0 * r2) * std::exp(-s5r);
  }

 private:
  void require_fitted() const {
    if (!fitted()) throw std::logic_error("GpModel: model not fitted");
  }

  void factorize() {
    Mat k_matrix = kernel_matrix(hyper_, kind_, z_);
    k_matrix.diagonal().array() += hyper_.noise_variance;
    auto [l, jit] = detail::chol_with_jitter(k_matrix);
    chol_l_ = std::move(l);
    jitter_ = jit;
    alpha_ = chol_l_.triangularView<Eigen::Lower>().solve(
        (y_std_.array() - hyper_.constant_mean).matrix());
    alpha_ = chol_l_.transpose().triangularView<Eigen::Upper>().solve(alpha_);
  }

  Vec kernel_vector(const Vec& z) const {
    Vec k(z_.rows());
    for (Eigen::Index i = 0; i < z_.rows(); ++i) k[i] = kernel_value(z, z_.row(i).transpose());
    return k;
  }

  // Column i holds dk(z, z_i)/dz.
  Mat kernel_vector_grad(const Vec& z) const {
    const Eigen::Index n = z_.rows();
    const Eigen::Index d = z.size();
    Mat dk(d, n);
    const Vec inv_l2 = hyper_.lengthscales.array().square().inverse();
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec delta = z - z_.row(i).transpose();
      if (kind_ == KernelKind::squared_exponential) {
        const double k = kernel_value(z, z_.row(i).transpose());
        dk.col(i) = -k * delta.cwiseProduct(inv_l2);
      } else {
        const double r = std::sqrt(delta.cwiseProduct(inv_l2.cwiseSqrt()).squaredNorm());
        const double s5r = std::sqrt(5.0) * r;
        const double dkdr2 = -5.0 / 6.0 * hyper_.signal_variance * (1.0 + s5r) * std::exp(-s5r);
        dk.col(i) = 2.0 * dkdr2 * delta.cwiseProduct(inv_l2);
      }
    }
    return dk;
  }

  static Mat kernel_matrix(const GpHyperparameters& h, KernelKind kind, const Mat& z) {
    const Eigen::Index n = z.rows();
    Mat k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      k(i, i) = h.signal_variance;
      for (Eigen::Index j = 0; j < i; ++j) {
        const Vec d = (z.row(i) - z.row(j)).transpose().cwiseQuotient(h.lengthscales);
        const double r2 = d.squaredNorm();
        double v;
        if (kind == KernelKind::squared_exponential) {
          v = h.signal_variance * std::exp(-0.5 * r2);
        } else {
          const double s5r = std::sqrt(5.0 * r2);
          v = h.signal_variance * (1.0 + s5r + 5.0 / 3.0 * r2) * std::exp(-s5r);
        }
        k(i, j) = k(j, i) = v;
      }
    }
    return k;
  }

  KernelKind kind_ = KernelKind::squared_exponential;
  GpHyperparameters hyper_;
  Mat z_;       // N x D scaled inputs
  Vec y_std_;   // standardized targets
  double y_mean_ = 0.0;
  double y_sd_ = 1.0;
  Mat chol_l_;
  Vec alpha_;
  double jitter_ = 0.0;

  friend class MllObjective;
};

// Log marginal likelihood and its gradient over log-parameters
// (log lengthscales, log signal variance, optionally log noise variance).
class MllObjective {
 public:
  MllObjective(KernelKind kind, const Mat& z, const Vec& y_std, bool learn_noise, double fixed_noise)
      : kind_(kind), z_(z), y_(y_std), learn_noise_(learn_noise), fixed_noise_(fixed_noise) {
    const Eigen::Index n = z.rows();
    const Eigen::Index d = z.cols();
    sq_diff_.reserve(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      Mat m(n, n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
          const double diff = z(i, k) - z(j, k);
          m(i, j) = diff * diff;
        }
      sq_diff_.push_back(std::move(m));
    }
  }

  int dim() const { return static_cast<int>(z_.cols()) + 1 + (learn_noise_ ? 1 : 0); }

  Vec pack(const GpHyperparameters& h) const {
    Vec theta(dim());
    theta.head(z_.cols()) = h.lengthscales.array().log();
    theta[z_.cols()] = std::log(h.signal_variance);
    if (learn_noise_) theta[z_.cols() + 1] = std::log(h.noise_variance);
    return theta;
  }

  GpHyperparameters unpack(const Vec& theta) const {
    GpHyperparameters h;
    h.lengthscales = theta.head(z_.cols()).array().exp();
    h.signal_variance = std::exp(theta[z_.cols()]);
    h.noise_variance = learn_noise_ ? std::exp(theta[z_.cols() + 1]) : fixed_noise_;
    h.constant_mean = 0.0;  // targets are standardized
    return h;
  }

  // Returns false when the factorization fails even with jitter.
  bool value_grad(const Vec& theta, double& mll, Vec& grad) const {
    const GpHyperparameters h = unpack(theta);
    const Eigen::Index n = z_.rows();
    const Eigen::Index d = z_.cols();

    const Vec inv_l2 = h.lengthscales.array().square().inverse();
    Mat r2 = Mat::Zero(n, n);
    for (Eigen::Index k = 0; k < d; ++k) r2 += sq_diff_[k] * inv_l2[k];

    Mat k_sig(n, n);
    Mat m52_factor;  // d k / d(r^2) for matern, reused by every lengthscale
    if (kind_ == KernelKind::squared_exponential) {
      k_sig = h.signal_variance * (-0.5 * r2.array()).exp();
    } else {
      const Mat r = r2.array().sqrt();
      const Mat e = (-std::sqrt(5.0) * r.array()).exp();
      k_sig = h.signal_variance *
              ((1.0 + std::sqrt(5.0) * r.array() + 5.0 / 3.0 * r2.array()) * e.array());
      m52_factor = -5.0 / 6.0 * h.signal_variance * ((1.0 + std::sqrt(5.0) * r.array()) * e.array());
    }

    Mat k_full = k_sig;
    k_full.diagonal().array() += h.noise_variance;
    Eigen::LLT<Mat> llt(k_full);
    double jitter = 0.0;
    if (llt.info() != Eigen::Success) {
      for (jitter = 1e-10; jitter <= 1e-4 * (1.0 + 1e-12); jitter *= 10.0) {
        Mat kj = k_full;
        kj.diagonal().array() += jitter;
        llt.compute(kj);
        if (llt.info() == Eigen::Success) break;
      }
      if (llt.info() != Eigen::Success) return false;
    }

    const Mat l = llt.matrixL();
    const Vec alpha = llt.solve(y_);
    mll = -0.5 * y_.dot(alpha) - l.diagonal().array().log().sum() - 0.5 * n * std::log(2.0 * M_PI);

    // d mll / d theta_j = 0.5 * sum( (alpha alpha^T - K^-1) o dK/dtheta_j )
    Mat a = alpha * alpha.transpose() - llt.solve(Mat::Identity(n, n));
    grad.resize(dim());
    for (Eigen::Index k = 0; k < d; ++k) {
      Mat dk;
      if (kind_ == KernelKind::squared_exponential)
        dk = (k_sig.array() * sq_diff_[k].array()) * inv_l2[k];
      else
        dk = (-2.0 * m52_factor.array() * sq_diff_[k].array()) * inv_l2[k];
      grad[k] = 0.5 * (a.array() * dk.array()).sum();
    }
    grad[d] = 0.5 * (a.array() * k_sig.array()).sum();  // dK/dlog sf2 = K_sig
    if (learn_noise_) grad[d + 1] = 0.5 * h.noise_variance * a.trace();
    return std::isfinite(mll);
  }

 private:
  KernelKind kind_;
  const Mat& z_;
  const Vec& y_;
  bool learn_noise_;
  double fixed_noise_;
  std::vector<Mat> sq_diff_;
};

inline GpModel GpModel::fit(KernelKind kind, const Mat& inputs, const Vec& targets_raw,
                            const GpConfig& cfg, RandomSource rng,
                            const GpHyperparameters* warm_start, GpFitReport* report) {
  if (inputs.rows() < 2) throw std::invalid_argument("GP fit: need at least 2 records");
  const double mean = targets_raw.mean();
  const double var = (targets_raw.array() - mean).square().mean();
  const double sd = var > 1e-24 ? std::sqrt(var) : 1.0;
  const Vec y_std = (targets_raw.array() - mean) / sd;

  MllObjective obj(kind, inputs, y_std, cfg.learn_noise, cfg.noise_variance);
  const int d = static_cast<int>(inputs.cols());

  std::vector<Vec> starts;
  if (warm_start && warm_start->lengthscales.size() == d) starts.push_back(obj.pack(*warm_start));
  for (int r = 0; r < cfg.restarts; ++r) {
    GpHyperparameters h;
    h.lengthscales = Vec(d);
    for (int j = 0; j < d; ++j) h.lengthscales[j] = std::exp(rng.uniform(std::log(0.05), std::log(2.0)));
    h.signal_variance = std::exp(rng.uniform(std::log(0.25), std::log(4.0)));
    h.noise_variance = cfg.noise_variance;
    starts.push_back(obj.pack(h));
  }

  const double lo = -7.0, hi = 7.0;
  double best_mll = -std::numeric_limits<double>::infinity();
  Vec best_theta;
  for (const Vec& start : starts) {
    Vec theta = start.cwiseMax(lo).cwiseMin(hi);
    double mll;
    Vec grad;
    if (!obj.value_grad(theta, mll, grad)) continue;
    if (report) report->start_mll.push_back(mll);
    if (mll > best_mll) {
      best_mll = mll;
      best_theta = theta;
    }
    for (int step = 0; step < cfg.mll_steps; ++step) {
      const double gnorm = grad.norm();
      if (gnorm < 1e-8) break;
      // step 0.05 in log-parameter space; clip to unit gradient norm so a
      // large-N likelihood surface cannot blow up the iterate
      theta += cfg.mll_step_size * (gnorm > 1.0 ? Vec(grad / gnorm) : grad);
      theta = theta.cwiseMax(lo).cwiseMin(hi);
      if (!obj.value_grad(theta, mll, grad)) break;
      if (mll > best_mll) {
        best_mll = mll;
        best_theta = theta;
      }
    }
  }
  if (!std::isfinite(best_mll)) throw std::runtime_error("GP fit: all restarts failed");
  if (report) report->final_mll = best_mll;

  GpHyperparameters h = obj.unpack(best_theta);
  return GpModel(kind, std::move(h), inputs, targets_raw);
}

}  // namespace ppsl
