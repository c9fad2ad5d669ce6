#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ppsl/rng.hpp"
#include "ppsl/types.hpp"

namespace ppsl {

struct MlpLayerSpec {
  int in_dim;
  int out_dim;
};

// Plain MLP parameter block (weights out x in, biases out). Used for the
// shared base weights theta0 and for the hypernetwork's own layers.
struct MlpWeights {
  std::vector<Mat> w;
  std::vector<Vec> b;

  void set_zero() {
    for (auto& m : w) m.setZero();
    for (auto& v : b) v.setZero();
  }

  void axpy(double scale, const MlpWeights& other) {
    check_shapes(other);
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] += scale * other.w[i];
      b[i] += scale * other.b[i];
    }
  }

  void scale(double s) {
    for (auto& m : w) m *= s;
    for (auto& v : b) v *= s;
  }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& m : w) s += m.squaredNorm();
    for (const auto& v : b) s += v.squaredNorm();
    return s;
  }

  void check_shapes(const MlpWeights& other) const {
    if (other.w.size() != w.size() || other.b.size() != b.size())
      throw std::invalid_argument("MlpWeights: layer count mismatch");
    for (std::size_t i = 0; i < w.size(); ++i)
      if (other.w[i].rows() != w[i].rows() || other.w[i].cols() != w[i].cols() ||
          other.b[i].size() != b[i].size())
        throw std::invalid_argument("MlpWeights: shape mismatch at layer " + std::to_string(i));
  }
};

using BaseWeights = MlpWeights;

// Per-layer low-rank factors B (d x r), A (r x k); theta_ps = theta0 + B*A.
struct LoraFactors {
  std::vector<Mat> b;
  std::vector<Mat> a;
  int rank = 0;
};

namespace detail {

inline Mat relu(const Mat& z) { return z.cwiseMax(0.0); }

inline void fan_in_uniform_fill(Mat& m, RandomSource& rng) {
  const double a = std::sqrt(1.0 / static_cast<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(-a, a);
}

}  // namespace detail

struct HyperNetCache {
  Vec input;
  std::vector<Vec> pre;   // pre-activations per layer
  std::vector<Vec> post;  // post-activations per hidden layer
  Vec output;
};

// MLP from the task parameter to the flattened LoRA factors. ReLU hidden
// activations, linear output.
class HyperNetwork {
 public:
  HyperNetwork() = default;
  explicit HyperNetwork(MlpWeights weights) : weights_(std::move(weights)) {}

  const MlpWeights& weights() const { return weights_; }
  MlpWeights& weights() { return weights_; }
  int input_dim() const { return static_cast<int>(weights_.w.front().cols()); }
  int output_dim() const { return static_cast<int>(weights_.w.back().rows()); }
  std::size_t layer_count() const { return weights_.w.size(); }

  Vec forward(const Vec& t, HyperNetCache* cache = nullptr) const {
    if (t.size() != input_dim()) throw std::invalid_argument("HyperNetwork: task dimension mismatch");
    if (cache) {
      cache->input = t;
      cache->pre.clear();
      cache->post.clear();
    }
    Vec h = t;
    const std::size_t last = weights_.w.size() - 1;
    for (std::size_t l = 0; l <= last; ++l) {
      Vec z = weights_.w[l] * h + weights_.b[l];
      if (cache) cache->pre.push_back(z);
      h = l == last ? z : Vec(z.cwiseMax(0.0));
      if (cache && l != last) cache->post.push_back(h);
    }
    if (cache) cache->output = h;
    return h;
  }

  // Accumulates d loss / d weights into grads given d loss / d output.
  void backward(const HyperNetCache& cache, const Vec& dout, MlpWeights& grads) const {
    Vec delta = dout;
    for (std::size_t l = weights_.w.size(); l-- > 0;) {
      const Vec& input = l == 0 ? cache.input : cache.post[l - 1];
      grads.w[l] += delta * input.transpose();
      grads.b[l] += delta;
      if (l > 0)
        delta = (weights_.w[l].transpose() * delta).cwiseProduct(
            (cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }

 private:
  MlpWeights weights_;
};

struct ModelConfig {
  int pref_dim = 2;             // m, first-layer input width
  Box decision_box;             // output mapping
  int task_dim = 1;             // p, hypernetwork input width
  std::vector<int> ps_hidden;   // empty -> paper default for m
  std::vector<int> hn_hidden;   // empty -> paper default
  int rank = 3;

  std::vector<int> effective_ps_hidden() const {
    if (!ps_hidden.empty()) return ps_hidden;
    if (pref_dim == 2) return {512, 512};
    return {256, 256, 256};
  }

  std::vector<int> effective_hn_hidden() const {
    if (!hn_hidden.empty()) return hn_hidden;
    return {1024, 1024, 1024, 1024};
  }
};

struct PsGradients {
  MlpWeights base;
  MlpWeights hypernet;

  void set_zero() {
    base.set_zero();
    hypernet.set_zero();
  }

  void axpy(double scale, const PsGradients& other) {
    base.axpy(scale, other.base);
    hypernet.axpy(scale, other.hypernet);
  }

  void scale(double s) {
    base.scale(s);
    hypernet.scale(s);
  }
};

// Activation cache for one task parameter and a batch of preference columns.
struct PsForwardCache {
  Vec t;
  HyperNetCache hn;
  LoraFactors lora;
  std::vector<Mat> w_eff;
  Mat lambdas;             // m x K
  std::vector<Mat> pre;    // per layer, out x K
  Mat final_pre;           // pre-sigmoid outputs, n x K
  Mat x;                   // decisions, n x K
  bool ready = false;
};

// Parametric Pareto-set model: x = h_{theta_ps(t)}(lambda) with per-layer
// weights theta_ps^l(t) = theta0^l + B^l(t) A^l(t), the low-rank factors
// emitted by a hypernetwork conditioned on t. Hidden activations are ReLU;
// the final layer is squashed by a sigmoid mapped affinely onto the decision
// box, so outputs are always feasible. LoRA touches weight matrices only;
// biases live in theta0.
class ParametricPsModel {
 public:
  ParametricPsModel() = default;

  ParametricPsModel(std::vector<MlpLayerSpec> layers, BaseWeights base, HyperNetwork hn, int rank,
                    Box decision_box)
      : layers_(std::move(layers)),
        base_(std::move(base)),
        hn_(std::move(hn)),
        rank_(rank),
        decision_box_(std::move(decision_box)) {
    if (hn_.output_dim() != lora_output_dim())
      throw std::invalid_argument("ParametricPsModel: hypernetwork output length mismatch");
    // r may exceed min(d,k) on the narrow input/output layers (the paper's
    // defaults do); the product's rank is still bounded by min(d, k, r).
    if (rank_ < 1) throw std::invalid_argument("ParametricPsModel: rank must be >= 1");
  }

  static ParametricPsModel init(const ModelConfig& cfg, RandomSource& rng);

  int pref_dim() const { return layers_.front().in_dim; }
  int decision_dim() const { return layers_.back().out_dim; }
  int task_dim() const { return hn_.input_dim(); }
  int rank() const { return rank_; }
  const std::vector<MlpLayerSpec>& layer_specs() const { return layers_; }
  const BaseWeights& base_weights() const { return base_; }
  const HyperNetwork& hypernet() const { return hn_; }
  const Box& decision_box() const { return decision_box_; }

  // Total hypernetwork output length: sum_l r * (d^l + k^l).
  int lora_output_dim() const {
    int total = 0;
    for (const auto& s : layers_) total += rank_ * (s.out_dim + s.in_dim);
    return total;
  }

  int base_weight_count() const {
    int total = 0;
    for (const auto& s : layers_) total += s.out_dim * s.in_dim;
    return total;
  }

  // Slices the flat hypernetwork output into per-layer factors. Convention:
  // for each layer, B^l (column-major, d x r) followed by A^l (r x k).
  LoraFactors unflatten_lora(const Vec& flat) const {
    if (flat.size() != lora_output_dim())
      throw std::invalid_argument("unflatten_lora: length mismatch");
    LoraFactors f;
    f.rank = rank_;
    int offset = 0;
    for (const auto& s : layers_) {
      f.b.emplace_back(Eigen::Map<const Mat>(flat.data() + offset, s.out_dim, rank_));
      offset += s.out_dim * rank_;
      f.a.emplace_back(Eigen::Map<const Mat>(flat.data() + offset, rank_, s.in_dim));
      offset += rank_ * s.in_dim;
    }
    return f;
  }

  Vec flatten_lora(const std::vector<Mat>& b, const std::vector<Mat>& a) const {
    Vec flat(lora_output_dim());
    int offset = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Eigen::Map<Mat>(flat.data() + offset, b[l].rows(), b[l].cols()) = b[l];
      offset += static_cast<int>(b[l].size());
      Eigen::Map<Mat>(flat.data() + offset, a[l].rows(), a[l].cols()) = a[l];
      offset += static_cast<int>(a[l].size());
    }
    return flat;
  }

  // theta_ps^l(t) = theta0^l + B^l(t) A^l(t) for every layer.
  std::vector<Mat> effective_weights(const TaskParameter& t) const {
    PsForwardCache cache;
    compose(t, cache);
    return cache.w_eff;
  }

  // Runs the hypernetwork and assembles the effective weights.
  void compose(const TaskParameter& t, PsForwardCache& cache) const {
    const Vec out = hn_.forward(t.values, &cache.hn);
    cache.t = t.values;
    cache.lora = unflatten_lora(out);
    cache.w_eff.clear();
    cache.w_eff.reserve(layers_.size());
    for (std::size_t l = 0; l < layers_.size(); ++l)
      cache.w_eff.push_back(base_.w[l] + cache.lora.b[l] * cache.lora.a[l]);
    cache.ready = false;
  }

  // Batched forward pass: columns of lambdas are preference vectors.
  const Mat& forward_batch(PsForwardCache& cache, const Mat& lambdas) const {
    if (lambdas.rows() != pref_dim())
      throw std::invalid_argument("forward_batch: preference dimension mismatch");
    cache.lambdas = lambdas;
    cache.pre.assign(layers_.size(), Mat());
    Mat h = lambdas;
    const std::size_t last = layers_.size() - 1;
    for (std::size_t l = 0; l <= last; ++l) {
      cache.pre[l] = (cache.w_eff[l] * h).colwise() + base_.b[l];
      h = l == last ? cache.pre[l] : detail::relu(cache.pre[l]);
    }
    cache.final_pre = cache.pre[last];
    const Vec span = decision_box_.span();
    cache.x = (1.0 / (1.0 + (-cache.final_pre.array()).exp())).matrix();
    cache.x.array().colwise() *= span.array();
    cache.x.colwise() += decision_box_.lb;
    cache.ready = true;
    return cache.x;
  }

  DecisionVector forward(const PreferenceVector& lambda, const TaskParameter& t) const {
    PsForwardCache cache;
    compose(t, cache);
    forward_batch(cache, lambda.weights);
    return DecisionVector(cache.x.col(0));
  }

  // Reverse-mode gradients for the batch in `cache`, given d loss / d x per
  // column. Gradients are summed over the batch and accumulated into grads.
  void backward_batch(const PsForwardCache& cache, const Mat& grad_x, PsGradients& grads) const {
    if (!cache.ready) throw std::logic_error("backward_batch: no cached forward pass");
    if (grad_x.rows() != decision_dim() || grad_x.cols() != cache.x.cols())
      throw std::invalid_argument("backward_batch: gradient shape mismatch");

    const Vec span = decision_box_.span();
    // d x / d s = span * sigmoid(s) * (1 - sigmoid(s))
    const Mat sig = (1.0 / (1.0 + (-cache.final_pre.array()).exp())).matrix();
    Mat delta = grad_x.cwiseProduct((sig.array() * (1.0 - sig.array())).matrix());
    delta.array().colwise() *= span.array();

    std::vector<Mat> dw_eff(layers_.size());
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const Mat& input = l == 0 ? cache.lambdas : detail::relu(cache.pre[l - 1]);
      dw_eff[l] = delta * input.transpose();
      grads.base.b[l] += delta.rowwise().sum();
      if (l > 0)
        delta = (cache.w_eff[l].transpose() * delta)
                    .cwiseProduct((cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }

    std::vector<Mat> db(layers_.size()), da(layers_.size());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      grads.base.w[l] += dw_eff[l];  // d theta_ps / d theta0 = identity
      db[l] = dw_eff[l] * cache.lora.a[l].transpose();
      da[l] = cache.lora.b[l].transpose() * dw_eff[l];
    }
    hn_.backward(cache.hn, flatten_lora(db, da), grads.hypernet);
  }

  // Single-sample gradients of a scalar loss whose decision-space gradient
  // is grad_x.
  PsGradients backward(const PreferenceVector& lambda, const TaskParameter& t,
                       const Vec& grad_x) const {
    if (grad_x.size() != decision_dim()) throw std::invalid_argument("backward: grad_x size mismatch");
    PsForwardCache cache;
    compose(t, cache);
    forward_batch(cache, lambda.weights);
    PsGradients grads = zero_gradients();
    backward_batch(cache, grad_x, grads);
    return grads;
  }

  PsGradients zero_gradients() const {
    PsGradients g;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      g.base.w.emplace_back(Mat::Zero(layers_[l].out_dim, layers_[l].in_dim));
      g.base.b.emplace_back(Vec::Zero(layers_[l].out_dim));
    }
    for (const auto& w : hn_.weights().w) g.hypernet.w.emplace_back(Mat::Zero(w.rows(), w.cols()));
    for (const auto& b : hn_.weights().b) g.hypernet.b.emplace_back(Vec::Zero(b.size()));
    return g;
  }

  // theta0 <- theta0 - eta_b * grad; theta_hn <- theta_hn - eta_hn * grad.
  void sgd_step(const PsGradients& grads, double eta_base, double eta_hypernet) {
    base_.check_shapes(grads.base);
    hn_.weights().check_shapes(grads.hypernet);
    base_.axpy(-eta_base, grads.base);
    hn_.weights().axpy(-eta_hypernet, grads.hypernet);
  }

  BaseWeights& mutable_base_weights() { return base_; }
  HyperNetwork& mutable_hypernet() { return hn_; }

 private:
  std::vector<MlpLayerSpec> layers_;
  BaseWeights base_;
  HyperNetwork hn_;
  int rank_ = 1;
  Box decision_box_;
};

// Fresh model: scaled-uniform fan-in init for theta0 and the hypernetwork
// hidden layers; the hypernetwork output layer starts at zero so the initial
// LoRA factors vanish and the model begins as the pure base model.
inline ParametricPsModel ParametricPsModel::init(const ModelConfig& cfg, RandomSource& rng) {
  const auto ps_hidden = cfg.effective_ps_hidden();
  const auto hn_hidden = cfg.effective_hn_hidden();
  const int n = cfg.decision_box.dim();
  if (n < 1) throw std::invalid_argument("ParametricPsModel::init: empty decision box");
  if (cfg.task_dim < 1) throw std::invalid_argument("ParametricPsModel::init: task_dim must be >= 1");

  std::vector<MlpLayerSpec> layers;
  int in = cfg.pref_dim;
  for (int h : ps_hidden) {
    layers.push_back({in, h});
    in = h;
  }
  layers.push_back({in, n});

  BaseWeights base;
  for (const auto& s : layers) {
    Mat w(s.out_dim, s.in_dim);
    detail::fan_in_uniform_fill(w, rng);
    base.w.push_back(std::move(w));
    base.b.emplace_back(Vec::Zero(s.out_dim));
  }

  int lora_dim = 0;
  for (const auto& s : layers) lora_dim += cfg.rank * (s.out_dim + s.in_dim);

  MlpWeights hn;
  int hn_in = cfg.task_dim;
  for (int h : hn_hidden) {
    Mat w(h, hn_in);
    detail::fan_in_uniform_fill(w, rng);
    hn.w.push_back(std::move(w));
    hn.b.emplace_back(Vec::Zero(h));
    hn_in = h;
  }
  hn.w.emplace_back(Mat::Zero(lora_dim, hn_in));
  hn.b.emplace_back(Vec::Zero(lora_dim));

  return ParametricPsModel(std::move(layers), std::move(base), HyperNetwork(std::move(hn)),
                           cfg.rank, cfg.decision_box);
}

}  // namespace ppsl
