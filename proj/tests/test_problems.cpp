#include <catch2/catch_amalgamated.hpp>

#include "ppsl/problems.hpp"
#include "ppsl/rng.hpp"
#include "ppsl/sampling.hpp"

using namespace ppsl;

namespace {

DecisionVector dv(std::initializer_list<double> v) {
  Vec x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x[i++] = d;
  return DecisionVector(std::move(x));
}

TaskParameter tp(double t) {
  Vec v(1);
  v << t;
  return TaskParameter(std::move(v));
}

}  // namespace

TEST_CASE("synth-p1 evaluates the stated formula") {
  SynthP1 p;
  // g = 1 + 0.5 + 0 = 1.5; f = (0, 1.5)
  const auto f1 = p.evaluate(dv({0.0, 0.5}), tp(0.5));
  REQUIRE(f1.values[0] == Catch::Approx(0.0).margin(1e-15));
  REQUIRE(f1.values[1] == Catch::Approx(1.5).margin(1e-12));
  // g = 1; f2 = 1 - sqrt(1) = 0
  const auto f2 = p.evaluate(dv({1.0, 0.0}), tp(0.0));
  REQUIRE(f2.values[0] == Catch::Approx(1.0));
  REQUIRE(f2.values[1] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("evaluation counter increments by exactly one per call") {
  SynthP1 p;
  REQUIRE(p.evaluation_count() == 0);
  p.evaluate(dv({0.5, 0.5}), tp(0.5));
  REQUIRE(p.evaluation_count() == 1);
  p.evaluate(dv({0.25, 0.5}), tp(0.5));
  REQUIRE(p.evaluation_count() == 2);
  // audit evaluations use a separate counter
  p.evaluate_audit(dv({0.25, 0.5}), tp(0.5));
  REQUIRE(p.evaluation_count() == 2);
  REQUIRE(p.audit_count() == 1);
}

TEST_CASE("out-of-box evaluation raises and leaves the counter untouched") {
  SynthP1 p;
  REQUIRE_THROWS_AS(p.evaluate(dv({1.5, 0.5}), tp(0.5)), std::domain_error);
  REQUIRE_THROWS_AS(p.evaluate(dv({0.5, 0.5}), tp(1.5)), std::domain_error);
  REQUIRE(p.evaluation_count() == 0);
}

TEST_CASE("wrap_shared partitions dimensions") {
  auto base = std::make_shared<CallbackProblem>(
      "quad2", Box::unit(2), Box(Vec(0), Vec(0)), 2, [](const Vec& x, const Vec&) {
        Vec f(2);
        f << x[0] * x[0] + x[1], x[1] * x[1] + x[0];
        return f;
      });
  auto wrapped = wrap_shared({base, {0}});
  REQUIRE(wrapped->decision_dim() == 1);
  REQUIRE(wrapped->parameter_dim() == 1);

  auto base4 = std::make_shared<CallbackProblem>(
      "quad4", Box::unit(4), Box(Vec(0), Vec(0)), 2, [](const Vec& x, const Vec&) {
        Vec f(2);
        f << x.squaredNorm(), (x.array() - 1.0).matrix().squaredNorm();
        return f;
      });
  auto wrapped4 = wrap_shared({base4, {0, 1}});
  REQUIRE(wrapped4->decision_dim() == 2);
  REQUIRE(wrapped4->parameter_dim() == 2);

  REQUIRE_THROWS_AS(wrap_shared({base, {0, 1}}), std::invalid_argument);  // empty free set
  REQUIRE_THROWS_AS(wrap_shared({base, {5}}), std::invalid_argument);     // out of range
}

TEST_CASE("wrapped evaluation equals merge-and-evaluate oracle") {
  auto base = std::make_shared<CallbackProblem>(
      "mix3", Box::unit(3), Box(Vec(0), Vec(0)), 2, [](const Vec& x, const Vec&) {
        Vec f(2);
        f << x[0] + 2.0 * x[1] + 3.0 * x[2], x[0] * x[1] * x[2];
        return f;
      });
  auto wrapped = wrap_shared({base, {1}});
  RandomSource rng(4);
  for (int i = 0; i < 20; ++i) {
    Vec xf(2), s(1);
    xf << rng.uniform(), rng.uniform();
    s << rng.uniform();
    const auto got = wrapped->evaluate(DecisionVector(xf), TaskParameter(s));
    Vec full(3);
    full << xf[0], s[0], xf[1];
    const auto expected = base->evaluate_audit(DecisionVector(full), TaskParameter(Vec(0)));
    REQUIRE(got.values == expected.values);
  }
}

TEST_CASE("wrap_shared conserves evaluation counts") {
  auto base = std::make_shared<CallbackProblem>(
      "quad2", Box::unit(2), Box(Vec(0), Vec(0)), 2, [](const Vec& x, const Vec&) {
        Vec f(2);
        f << x[0], x[1];
        return f;
      });
  auto wrapped = wrap_shared({base, {0}});
  Vec xf(1), s(1);
  xf << 0.5;
  s << 0.25;
  for (int i = 1; i <= 5; ++i) {
    wrapped->evaluate(DecisionVector(xf), TaskParameter(s));
    REQUIRE(wrapped->evaluation_count() == i);
    REQUIRE(base->evaluation_count() == i);
  }
}

TEST_CASE("time index follows the benchmark clock") {
  REQUIRE(time_index({10, 2, 20}, 7) == Catch::Approx(0.3));
  REQUIRE(time_index({10, 2, 20}, 0) == 0.0);
  REQUIRE(time_index({5, 2, 20}, 4) == Catch::Approx(0.4));
  REQUIRE_THROWS_AS(time_index({10, 2, 20}, 21), std::invalid_argument);
  REQUIRE_THROWS_AS(time_index({0, 2, 20}, 2), std::invalid_argument);
}

TEST_CASE("time index is non-decreasing with plateau length tau_t") {
  const DynamicSpec spec{10, 3, 30};
  double prev = -1.0;
  for (int tau = 0; tau <= 30; ++tau) {
    const double t = time_index(spec, tau);
    REQUIRE(t >= prev);
    if (tau % 3 != 0) REQUIRE(t == time_index(spec, tau - tau % 3));
    prev = t;
  }
}

TEST_CASE("synth-p1 analytic front endpoints") {
  SynthP1 p;
  const auto front = p.analytic_front(tp(0.0), 2);
  REQUIRE(front.size() == 2);
  REQUIRE(front[0].values[0] == 0.0);
  REQUIRE(front[0].values[1] == Catch::Approx(1.0));
  REQUIRE(front[1].values[0] == 1.0);
  REQUIRE(front[1].values[1] == Catch::Approx(0.0).margin(1e-12));

  REQUIRE(p.analytic_front(tp(0.7), 1).size() == 1);
}

TEST_CASE("analytic fronts are mutually non-dominated for random t") {
  RandomSource rng(17);
  std::vector<ProblemPtr> problems = {std::make_shared<SynthP1>(), std::make_shared<SynthP2>(),
                                      std::make_shared<SynthD1>()};
  for (const auto& p : problems) {
    for (int trial = 0; trial < 100; ++trial) {
      const auto t = tp(rng.uniform());
      const auto front = p->analytic_front(t, 25);
      const auto kept = nondominated_filter(front);
      REQUIRE(kept.size() == front.size());
    }
  }
}

TEST_CASE("plugin problems without analytic front refuse to produce one") {
  CallbackProblem p("plugin", Box::unit(2), Box::unit(1), 2, [](const Vec& x, const Vec&) {
    Vec f(2);
    f << x[0], x[1];
    return f;
  });
  REQUIRE(!p.has_analytic_front());
  REQUIRE_THROWS_AS(p.analytic_front(tp(0.5), 10), std::runtime_error);
}

TEST_CASE("synth-p1 pareto set points survive random challenges") {
  SynthP1 p;
  RandomSource rng(23);
  for (double t : {0.0, 0.3, 0.8}) {
    // a solution on the stated Pareto set: x2 = t
    const auto champion = p.evaluate_audit(dv({0.4, t}), tp(t));
    for (int i = 0; i < 1000; ++i) {
      Vec x(2);
      x << rng.uniform(), rng.uniform();
      const auto challenger = p.evaluate_audit(DecisionVector(x), tp(t));
      REQUIRE(!dominates(challenger.values, champion.values));
    }
  }
}

TEST_CASE("synth-p2 pareto set lies on the scaled sphere octant") {
  SynthP2 p;
  RandomSource rng(29);
  for (int i = 0; i < 50; ++i) {
    const double t = rng.uniform();
    Vec x(3);
    x << rng.uniform(), rng.uniform(), t;  // x3 = t makes g vanish
    const auto f = p.evaluate_audit(DecisionVector(x), tp(t));
    REQUIRE(f.values.norm() == Catch::Approx(1.0 + t).margin(1e-9));
    REQUIRE(f.values.minCoeff() >= -1e-12);
  }
}

TEST_CASE("synth-d1 pareto set tracks the moving optimum") {
  SynthD1 p(10);
  RandomSource rng(31);
  for (double t : {0.0, 0.25, 0.5, 1.0}) {
    const double G = std::sin(0.5 * M_PI * t);
    Vec x = Vec::Constant(10, G);
    x[0] = 0.49;
    const auto f = p.evaluate_audit(DecisionVector(x), tp(t));
    REQUIRE(f.values[1] == Catch::Approx(1.0 - std::sqrt(0.49)).margin(1e-12));
  }
}

TEST_CASE("problem registry resolves names") {
  REQUIRE(make_problem("synth-p1")->num_objectives() == 2);
  REQUIRE(make_problem("synth-d1", {{"n", 12}})->decision_dim() == 12);
  REQUIRE_THROWS_AS(make_problem("no-such-problem"), std::invalid_argument);

  register_problem("test-plugin", [](const std::map<std::string, double>&) {
    return std::make_shared<CallbackProblem>("test-plugin", Box::unit(2), Box::unit(1), 2,
                                             [](const Vec& x, const Vec&) {
                                               Vec f(2);
                                               f << x[0], x[1];
                                               return f;
                                             });
  });
  REQUIRE(make_problem("test-plugin")->decision_dim() == 2);
}
