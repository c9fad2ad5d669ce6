#include <catch2/catch_amalgamated.hpp>

#include "ppsl/rng.hpp"
#include "ppsl/sampling.hpp"
#include "ppsl/scalarize.hpp"
#include "ppsl/surrogate.hpp"
#include "test_helpers.hpp"

using namespace ppsl;

namespace {

PreferenceVector pref(std::initializer_list<double> w) {
  Vec v(static_cast<Eigen::Index>(w.size()));
  Eigen::Index i = 0;
  for (double d : w) v[i++] = d;
  return PreferenceVector(std::move(v));
}

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// ideal point whose effective value z* - eps is exactly zero
IdealPoint zero_ideal(int m, double eps = 1e-3) { return IdealPoint(Vec::Constant(m, eps), eps); }

// Unstabilized STCH, usable only when the exponentials stay finite.
double naive_stch(const Vec& f, const PreferenceVector& lambda, const IdealPoint& ideal, double nu) {
  const Vec y = (lambda.weights.array() * (f.array() - ideal.effective().array())).matrix();
  return nu * std::log((y.array() / nu).exp().sum());
}

}  // namespace

TEST_CASE("tch anchor values") {
  REQUIRE(tch(vec2(1, 1), pref({0.5, 0.5}), zero_ideal(2)) == Catch::Approx(0.5));
  REQUIRE(tch(vec2(2, 1), pref({0.2, 0.8}), zero_ideal(2)) == Catch::Approx(0.8));
  REQUIRE(tch(vec2(3, 100), pref({1.0, 0.0}), zero_ideal(2)) == Catch::Approx(3.0));
}

TEST_CASE("stch anchor values") {
  const StchConfig cfg{0.01};
  REQUIRE(stch(vec2(1, 1), pref({0.5, 0.5}), zero_ideal(2), cfg) ==
          Catch::Approx(0.5 + 0.01 * std::log(2.0)).margin(1e-12));
  // high-precision direct evaluation: 0.8 + 0.01*log(1 + exp(-40))
  REQUIRE(stch(vec2(2, 1), pref({0.2, 0.8}), zero_ideal(2), cfg) ==
          Catch::Approx(0.8 + 0.01 * std::log1p(std::exp(-40.0))).margin(1e-15));
}

TEST_CASE("stch stays finite at extreme magnitudes") {
  const StchConfig cfg{0.001};
  const double big = 1e4;
  const double v = stch(vec2(big, big), pref({0.5, 0.5}), zero_ideal(2), cfg);
  REQUIRE(std::isfinite(v));
  REQUIRE(v == Catch::Approx(0.5 * big + 0.001 * std::log(2.0)).margin(1e-9));

  const double v2 = stch(Vec::Constant(2, 1e6), pref({0.5, 0.5}), zero_ideal(2), cfg);
  REQUIRE(std::isfinite(v2));
}

TEST_CASE("gradient weights in the symmetric case") {
  const StchConfig cfg{0.01};
  const Vec w = stch_grad_f(vec2(1, 1), pref({0.5, 0.5}), zero_ideal(2), cfg);
  REQUIRE(w[0] == Catch::Approx(0.25).margin(1e-12));
  REQUIRE(w[1] == Catch::Approx(0.25).margin(1e-12));
}

TEST_CASE("gradient weights saturate at the argmax") {
  const StchConfig cfg{0.01};
  const Vec w = stch_grad_f(vec2(10, 0.1), pref({0.3, 0.7}), zero_ideal(2), cfg);
  REQUIRE(w[0] == Catch::Approx(0.3).margin(1e-9));
  REQUIRE(w[1] == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("gradient weights match central finite differences") {
  RandomSource rng(5);
  const StchConfig cfg{0.05};
  for (int trial = 0; trial < 200; ++trial) {
    const auto lambda = sample_simplex(rng, 3);
    Vec f(3);
    for (int i = 0; i < 3; ++i) f[i] = rng.uniform(-1.0, 2.0);
    IdealPoint ideal(Vec::Constant(3, rng.uniform(-0.5, 0.0)), 1e-3);
    const Vec w = stch_grad_f(f, lambda, ideal, cfg);
    const double h = 1e-6;
    for (int i = 0; i < 3; ++i) {
      Vec fp = f, fm = f;
      fp[i] += h;
      fm[i] -= h;
      const double fd = (stch(fp, lambda, ideal, cfg) - stch(fm, lambda, ideal, cfg)) / (2 * h);
      REQUIRE(std::abs(w[i] - fd) <= 1e-5);
    }
  }
}

TEST_CASE("surrogate stch at beta zero reduces to stch over posterior means") {
  RandomSource rng(7);
  EvaluationArchive archive;
  for (int i = 0; i < 25; ++i) {
    Vec x(1), t(1), y(2);
    x << rng.uniform();
    t << rng.uniform();
    y << std::sin(3 * x[0]) + t[0], x[0] * x[0];
    archive.push(DecisionVector(x), TaskParameter(t), ObjectiveVector(y));
  }
  const auto s = GaussianSurrogate::fit(archive, Box::unit(1), Box::unit(1), GpConfig{}, RandomSource(2));
  const StchConfig cfg{0.01};
  const IdealPoint ideal = update_ideal(archive);
  for (int i = 0; i < 20; ++i) {
    Vec x(1), t(1);
    x << rng.uniform();
    t << rng.uniform();
    const auto lambda = sample_simplex(rng, 2);
    const auto [value, grad] =
        surrogate_stch(DecisionVector(x), TaskParameter(t), lambda, ideal, cfg, s, 0.0);
    const auto [mean, stdev] = s.posterior(DecisionVector(x), TaskParameter(t));
    REQUIRE(value == Catch::Approx(stch(mean.values, lambda, ideal, cfg)).margin(1e-12));
  }
}

TEST_CASE("surrogate stch gradient matches finite differences over 100 cases") {
  RandomSource rng(11);
  EvaluationArchive archive;
  for (int i = 0; i < 30; ++i) {
    Vec x(2), t(1), y(2);
    x << rng.uniform(), rng.uniform();
    t << rng.uniform();
    y << std::sin(3 * x[0]) * (1 + t[0]) + x[1], (x[0] - 0.5) * (x[0] - 0.5) + 0.3 * x[1];
    archive.push(DecisionVector(x), TaskParameter(t), ObjectiveVector(y));
  }
  const auto s = GaussianSurrogate::fit(archive, Box::unit(2), Box::unit(1), GpConfig{}, RandomSource(3));
  const StchConfig cfg{0.01};
  const IdealPoint ideal = update_ideal(archive);
  const double beta = 0.05;
  const double h = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    Vec x(2), t(1);
    x << rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95);
    t << rng.uniform();
    const auto lambda = sample_simplex(rng, 2);
    const auto [value, grad] =
        surrogate_stch(DecisionVector(x), TaskParameter(t), lambda, ideal, cfg, s, beta);
    for (int d = 0; d < 2; ++d) {
      Vec xp = x, xm = x;
      xp[d] += h;
      xm[d] -= h;
      const double vp =
          surrogate_stch(DecisionVector(xp), TaskParameter(t), lambda, ideal, cfg, s, beta).first;
      const double vm =
          surrogate_stch(DecisionVector(xm), TaskParameter(t), lambda, ideal, cfg, s, beta).first;
      const double fd = (vp - vm) / (2 * h);
      REQUIRE(ppsl::testing::relative_error(grad[d], fd, 1e-4) <= 1e-4);
    }
  }
}

TEST_CASE("surrogate stch at a training point approximates the observed loss") {
  RandomSource rng(13);
  EvaluationArchive archive;
  for (int i = 0; i < 25; ++i) {
    Vec x(1), t(1), y(2);
    x << rng.uniform();
    t << rng.uniform();
    y << x[0] + t[0], 1.0 - x[0];
    archive.push(DecisionVector(x), TaskParameter(t), ObjectiveVector(y));
  }
  const auto s = GaussianSurrogate::fit(archive, Box::unit(1), Box::unit(1), GpConfig{}, RandomSource(4));
  const StchConfig cfg{0.01};
  const IdealPoint ideal = update_ideal(archive);
  const auto lambda = pref({0.4, 0.6});
  const auto& rec = archive[3];
  const auto [value, grad] = surrogate_stch(rec.x, rec.t, lambda, ideal, cfg, s, 0.0);
  REQUIRE(value == Catch::Approx(stch(rec.y.values, lambda, ideal, cfg)).margin(1e-3));
}

TEST_CASE("update_ideal tracks the running minimum") {
  EvaluationArchive archive;
  Vec x(1), t(1);
  x << 0.5;
  t << 0.5;
  archive.push(DecisionVector(x), TaskParameter(t), ObjectiveVector(vec2(1, 2)));
  archive.push(DecisionVector(x), TaskParameter(t), ObjectiveVector(vec2(2, 1)));
  const auto ideal = update_ideal(archive);
  REQUIRE(ideal.z_star == vec2(1, 1));

  EvaluationArchive single;
  single.push(DecisionVector(x), TaskParameter(t), ObjectiveVector(vec2(3, 4)));
  REQUIRE(update_ideal(single).z_star == vec2(3, 4));

  // monotone: adding records never increases any component
  archive.push(DecisionVector(x), TaskParameter(t), ObjectiveVector(vec2(0.5, 3)));
  const auto updated = update_ideal(archive);
  REQUIRE(updated.z_star[0] <= ideal.z_star[0]);
  REQUIRE(updated.z_star[1] <= ideal.z_star[1]);

  EvaluationArchive empty;
  REQUIRE_THROWS_AS(update_ideal(empty), std::logic_error);
}

TEST_CASE("smooth-to-hard bound over random cases") {
  RandomSource rng(17);
  for (int trial = 0; trial < 10000; ++trial) {
    const int m = 2 + static_cast<int>(rng.uniform_index(2));
    const auto lambda = sample_simplex(rng, m);
    Vec f(m);
    for (int i = 0; i < m; ++i) f[i] = rng.uniform(-5.0, 5.0);
    IdealPoint ideal(Vec::Constant(m, rng.uniform(-1.0, 0.0)), 1e-3);
    const double nu = std::exp(rng.uniform(std::log(1e-3), std::log(1.0)));
    const StchConfig cfg{nu};
    const double hard = tch(f, lambda, ideal);
    const double smooth = stch(f, lambda, ideal, cfg);
    REQUIRE(smooth >= hard - 1e-12);
    REQUIRE(smooth <= hard + nu * std::log(static_cast<double>(m)) + 1e-12);
  }
}

TEST_CASE("tightness of the smooth bound at the symmetric point") {
  const StchConfig cfg{0.1};
  const double hard = tch(vec2(1, 1), pref({0.5, 0.5}), zero_ideal(2));
  const double smooth = stch(vec2(1, 1), pref({0.5, 0.5}), zero_ideal(2), cfg);
  REQUIRE(smooth - hard == Catch::Approx(0.1 * std::log(2.0)).margin(1e-12));
}

TEST_CASE("gradient weight bounds") {
  RandomSource rng(19);
  for (int trial = 0; trial < 10000; ++trial) {
    const int m = 2 + static_cast<int>(rng.uniform_index(2));
    const auto lambda = sample_simplex(rng, m);
    Vec f(m);
    for (int i = 0; i < m; ++i) f[i] = rng.uniform(-2.0, 2.0);
    const StchConfig cfg{std::exp(rng.uniform(std::log(1e-2), std::log(1.0)))};
    const Vec w = stch_grad_f(f, lambda, zero_ideal(m), cfg);
    REQUIRE(w.minCoeff() >= 0.0);
    const double sum = w.sum();
    REQUIRE(sum >= lambda.weights.minCoeff() - 1e-12);
    REQUIRE(sum <= lambda.weights.maxCoeff() + 1e-12);
  }
  // with equal shifted values the softmax is uniform, so the sum collapses
  // to mean(lambda) = 1/m
  const Vec w_eq = stch_grad_f(vec2(2, 2), pref({0.5, 0.5}), zero_ideal(2), StchConfig{0.05});
  REQUIRE(w_eq.sum() == Catch::Approx(0.5).margin(1e-12));
  const Vec w_eq3 = stch_grad_f(Vec::Constant(3, 1.0),
                                PreferenceVector(Vec::Constant(3, 1.0 / 3.0)), zero_ideal(3),
                                StchConfig{0.05});
  REQUIRE(w_eq3.sum() == Catch::Approx(1.0 / 3.0).margin(1e-12));
}

TEST_CASE("stabilized stch agrees with the naive form when it does not overflow") {
  RandomSource rng(23);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto lambda = sample_simplex(rng, 2);
    Vec f(2);
    f << rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0);
    const StchConfig cfg{std::exp(rng.uniform(std::log(0.05), std::log(1.0)))};
    const IdealPoint ideal = zero_ideal(2);
    const double naive = naive_stch(f, lambda, ideal, cfg.nu);
    if (!std::isfinite(naive)) continue;
    REQUIRE(stch(f, lambda, ideal, cfg) == Catch::Approx(naive).margin(1e-12));
  }
}

TEST_CASE("stch is monotone non-decreasing in every objective") {
  RandomSource rng(29);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto lambda = sample_simplex(rng, 3);
    Vec f(3);
    for (int i = 0; i < 3; ++i) f[i] = rng.uniform(-2.0, 2.0);
    const StchConfig cfg{0.05};
    const double before = stch(f, lambda, zero_ideal(3), cfg);
    const int d = static_cast<int>(rng.uniform_index(3));
    f[d] += rng.uniform(0.0, 1.0);
    REQUIRE(stch(f, lambda, zero_ideal(3), cfg) >= before - 1e-12);
  }
}

TEST_CASE("configuration validation") {
  REQUIRE_THROWS_AS(StchConfig{0.0}.validate(), std::invalid_argument);
  REQUIRE_THROWS_AS(IdealPoint(Vec::Zero(2), 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(tch(Vec::Zero(3), pref({0.5, 0.5}), zero_ideal(2)), std::invalid_argument);
}
