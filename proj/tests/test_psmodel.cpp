#include <catch2/catch_amalgamated.hpp>

#include <Eigen/SVD>

#include "ppsl/psmodel.hpp"
#include "ppsl/rng.hpp"
#include "ppsl/sampling.hpp"
#include "test_helpers.hpp"

using namespace ppsl;
using ppsl::testing::tiny_model;

namespace {

TaskParameter tp(double t) {
  Vec v(1);
  v << t;
  return TaskParameter(std::move(v));
}

PreferenceVector pref2(double a) {
  Vec v(2);
  v << a, 1.0 - a;
  return PreferenceVector(std::move(v));
}

}  // namespace

TEST_CASE("fresh model has effective weights equal to the base") {
  auto model = tiny_model(1, /*randomize_hn_output=*/false);
  const auto w_eff = model.effective_weights(tp(0.37));
  for (std::size_t l = 0; l < w_eff.size(); ++l)
    REQUIRE(w_eff[l] == model.base_weights().w[l]);
}

TEST_CASE("lora products have rank at most r") {
  auto model = tiny_model(2, /*randomize_hn_output=*/true);
  RandomSource rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto w_eff = model.effective_weights(tp(rng.uniform()));
    for (std::size_t l = 0; l < w_eff.size(); ++l) {
      const Mat delta = w_eff[l] - model.base_weights().w[l];
      Eigen::JacobiSVD<Mat> svd(delta);
      int rank = 0;
      for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()[i] > 1e-10 * svd.singularValues()[0]) ++rank;
      const int bound = std::min({model.rank(), static_cast<int>(delta.rows()),
                                  static_cast<int>(delta.cols())});
      REQUIRE(rank <= bound);
    }
  }
}

TEST_CASE("hypernetwork output length follows r*(d+k) per layer") {
  ModelConfig cfg;
  cfg.pref_dim = 2;
  cfg.decision_box = Box::unit(3);
  cfg.task_dim = 1;
  cfg.ps_hidden = {512, 512};
  cfg.hn_hidden = {8};
  cfg.rank = 3;
  RandomSource rng(5);
  const auto model = ParametricPsModel::init(cfg, rng);
  // middle layer is 512x512: r*(d+k) = 3*(512+512) = 3072
  const auto& specs = model.layer_specs();
  REQUIRE(specs[1].in_dim == 512);
  REQUIRE(specs[1].out_dim == 512);
  REQUIRE(model.rank() * (specs[1].in_dim + specs[1].out_dim) == 3072);
  int expected_total = 0;
  for (const auto& s : specs) expected_total += 3 * (s.in_dim + s.out_dim);
  REQUIRE(model.lora_output_dim() == expected_total);
  REQUIRE(model.hypernet().output_dim() == expected_total);
}

TEST_CASE("forward output always lies inside the decision box") {
  auto model = tiny_model(7, /*randomize_hn_output=*/true);
  // push the model around so outputs are not all near the center
  RandomSource noise(11);
  for (auto& w : model.mutable_base_weights().w)
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i / w.cols(), i % w.cols()) += noise.uniform(-2, 2);
  RandomSource rng(13);
  for (int i = 0; i < 100000; ++i) {
    const auto lambda = sample_simplex(rng, 2);
    const auto x = model.forward(lambda, tp(rng.uniform()));
    REQUIRE(Box::unit(2).contains(x.values, 0.0));
  }
}

TEST_CASE("fresh model ignores the task parameter") {
  auto model = tiny_model(17, /*randomize_hn_output=*/false);
  const auto lambda = pref2(0.3);
  const auto a = model.forward(lambda, tp(0.0));
  const auto b = model.forward(lambda, tp(1.0));
  REQUIRE(a.values == b.values);

  // and the init-time t-sensitivity is numerically zero
  const auto c = model.forward(lambda, tp(0.5));
  const auto d = model.forward(lambda, tp(0.5 + 1e-6));
  REQUIRE((c.values - d.values).lpNorm<Eigen::Infinity>() / 1e-6 <= 1e-9);
}

TEST_CASE("forward is continuous in t") {
  auto model = tiny_model(19, /*randomize_hn_output=*/true);
  const auto lambda = pref2(0.6);
  const auto a = model.forward(lambda, tp(0.5));
  const auto b = model.forward(lambda, tp(0.5 + 1e-6));
  REQUIRE((a.values - b.values).lpNorm<Eigen::Infinity>() <= 1e-3);
}

TEST_CASE("forward determinism") {
  auto model = tiny_model(23, /*randomize_hn_output=*/true);
  const auto lambda = pref2(0.41);
  const auto a = model.forward(lambda, tp(0.77));
  const auto b = model.forward(lambda, tp(0.77));
  REQUIRE(a.values == b.values);
}

TEST_CASE("same seed gives identical weights") {
  const auto a = tiny_model(31, true);
  const auto b = tiny_model(31, true);
  for (std::size_t l = 0; l < a.base_weights().w.size(); ++l) {
    REQUIRE(a.base_weights().w[l] == b.base_weights().w[l]);
    REQUIRE(a.base_weights().b[l] == b.base_weights().b[l]);
  }
  for (std::size_t l = 0; l < a.hypernet().weights().w.size(); ++l)
    REQUIRE(a.hypernet().weights().w[l] == b.hypernet().weights().w[l]);
}

TEST_CASE("zero upstream gradient produces zero parameter gradients") {
  auto model = tiny_model(37, /*randomize_hn_output=*/true);
  const auto grads = model.backward(pref2(0.5), tp(0.3), Vec::Zero(2));
  REQUIRE(grads.base.squared_norm() == 0.0);
  REQUIRE(grads.hypernet.squared_norm() == 0.0);
}

TEST_CASE("backward matches central finite differences on every coordinate") {
  auto model = tiny_model(41, /*randomize_hn_output=*/true);
  const auto lambda = pref2(0.35);
  const auto t = tp(0.6);
  Vec direction(2);
  direction << 0.8, -1.3;  // loss = direction . x

  const auto grads = model.backward(lambda, t, direction);
  const auto analytic = ppsl::testing::gradient_values(grads);
  auto refs = ppsl::testing::parameter_refs(model);
  REQUIRE(analytic.size() == refs.size());

  const double h = 1e-5;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const double saved = *refs[i];
    *refs[i] = saved + h;
    const double up = direction.dot(model.forward(lambda, t).values);
    *refs[i] = saved - h;
    const double down = direction.dot(model.forward(lambda, t).values);
    *refs[i] = saved;
    const double fd = (up - down) / (2.0 * h);
    REQUIRE(ppsl::testing::relative_error(analytic[i], fd) <= 1e-3);
  }
}

TEST_CASE("theta0 gradient equals plain MLP backprop with zero lora") {
  auto model = tiny_model(43, /*randomize_hn_output=*/false);  // lora identically zero
  const auto lambda = pref2(0.25);
  const auto t = tp(0.4);
  Vec direction(2);
  direction << 1.0, 0.5;

  const auto grads = model.backward(lambda, t, direction);

  // independent plain-MLP backprop oracle for layers 2 -> 4 -> 2
  const Mat& w1 = model.base_weights().w[0];
  const Vec& b1 = model.base_weights().b[0];
  const Mat& w2 = model.base_weights().w[1];
  const Vec& b2 = model.base_weights().b[1];
  const Vec z1 = w1 * lambda.weights + b1;
  const Vec h1 = z1.cwiseMax(0.0);
  const Vec z2 = w2 * h1 + b2;
  const Vec sig = (1.0 / (1.0 + (-z2.array()).exp())).matrix();
  // decision box is the unit cube: dx/dz2 = sig*(1-sig)
  const Vec delta2 = direction.cwiseProduct((sig.array() * (1.0 - sig.array())).matrix());
  const Mat dw2 = delta2 * h1.transpose();
  Vec delta1 = w2.transpose() * delta2;
  for (int i = 0; i < 4; ++i)
    if (z1[i] <= 0.0) delta1[i] = 0.0;
  const Mat dw1 = delta1 * lambda.weights.transpose();

  REQUIRE((grads.base.w[0] - dw1).lpNorm<Eigen::Infinity>() <= 1e-14);
  REQUIRE((grads.base.w[1] - dw2).lpNorm<Eigen::Infinity>() <= 1e-14);
  REQUIRE((grads.base.b[0] - delta1).lpNorm<Eigen::Infinity>() <= 1e-14);
  REQUIRE((grads.base.b[1] - delta2).lpNorm<Eigen::Infinity>() <= 1e-14);
}

TEST_CASE("default architectures follow the objective count") {
  ModelConfig two;
  two.pref_dim = 2;
  REQUIRE(two.effective_ps_hidden() == std::vector<int>{512, 512});
  ModelConfig three;
  three.pref_dim = 3;
  REQUIRE(three.effective_ps_hidden() == std::vector<int>{256, 256, 256});
  REQUIRE(two.effective_hn_hidden() == std::vector<int>{1024, 1024, 1024, 1024});
}

TEST_CASE("parameter economy: lora output stays below dense weight count") {
  for (int m : {2, 3}) {
    ModelConfig cfg;
    cfg.pref_dim = m;
    cfg.decision_box = Box::unit(6);
    cfg.task_dim = 1;
    cfg.rank = 3;
    RandomSource rng(47);
    const auto model = ParametricPsModel::init(cfg, rng);
    REQUIRE(model.lora_output_dim() < model.base_weight_count());
  }
}

TEST_CASE("sgd step with zero gradients leaves weights bit-identical") {
  auto model = tiny_model(53, true);
  const auto before_w = model.base_weights().w;
  const auto before_hn = model.hypernet().weights().w;
  model.sgd_step(model.zero_gradients(), 1e-3, 1e-5);
  for (std::size_t l = 0; l < before_w.size(); ++l)
    REQUIRE(model.base_weights().w[l] == before_w[l]);
  for (std::size_t l = 0; l < before_hn.size(); ++l)
    REQUIRE(model.hypernet().weights().w[l] == before_hn[l]);
}

TEST_CASE("sgd step descends a toy quadratic loss") {
  auto model = tiny_model(59, true);
  const auto lambda = pref2(0.5);
  const auto t = tp(0.5);
  const Vec target = Vec::Constant(2, 0.9);
  auto loss_of = [&]() {
    const auto x = model.forward(lambda, t);
    return 0.5 * (x.values - target).squaredNorm();
  };
  const double before = loss_of();
  const Vec grad_x = model.forward(lambda, t).values - target;
  const auto grads = model.backward(lambda, t, grad_x);
  model.sgd_step(grads, 1e-2, 1e-3);
  REQUIRE(loss_of() < before);
}

TEST_CASE("sgd step rejects mismatched shapes") {
  auto model = tiny_model(61, true);
  auto other = tiny_model(61, true);
  PsGradients grads = other.zero_gradients();
  grads.base.w.pop_back();
  REQUIRE_THROWS_AS(model.sgd_step(grads, 1e-3, 1e-5), std::invalid_argument);
}

TEST_CASE("dimension mismatches are rejected") {
  auto model = tiny_model(67, true);
  Vec bad_t(2);
  bad_t << 0.1, 0.2;
  REQUIRE_THROWS_AS(model.forward(pref2(0.5), TaskParameter(bad_t)), std::invalid_argument);
  Vec w3(3);
  w3 << 0.2, 0.3, 0.5;
  REQUIRE_THROWS_AS(model.forward(PreferenceVector(w3), tp(0.5)), std::invalid_argument);
}
