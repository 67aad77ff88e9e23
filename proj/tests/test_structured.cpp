#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "core/quadrature.hpp"
#include "core/rng.hpp"
#include "core/structured_model.hpp"
#include "helpers.hpp"

using namespace anovanet;
using namespace anovanet::testing;

namespace {
constexpr double kPi = 3.14159265358979323846;
const Quad1D kRule = Quad1D::gauss_legendre(kDefaultGaussOrder);
}  // namespace

TEST_CASE("component keys: ordering, enumeration, validity") {
  const auto keys = all_component_keys(3);
  REQUIRE(keys.size() == 6);
  CHECK(keys[0] == ComponentKey::uni(1));
  CHECK(keys[2] == ComponentKey::uni(3));
  CHECK(keys[3] == ComponentKey::bi(1, 2));
  CHECK(keys[5] == ComponentKey::bi(2, 3));
  for (std::size_t i = 1; i < keys.size(); ++i) CHECK(keys[i - 1] < keys[i]);

  StructuredModel bad;
  bad.d = 3;
  bad.bi.emplace(std::make_pair(2, 2), BiComponent{});
  CHECK_THROWS(bad.check_valid());

  StructuredModel oob;
  oob.d = 2;
  oob.uni.emplace(5, UniComponent{});
  CHECK_THROWS(oob.check_valid());
}

TEST_CASE("eval: intercept-only, truncation, compositional oracle") {
  StructuredModel m;
  m.d = 3;
  m.mu = 0.3;
  m.B = 1;
  Rng rng(1);
  for (int i = 0; i < 10; ++i) CHECK(m.eval(random_point(3, rng)) == 0.3);

  StructuredModel t;
  t.d = 1;
  t.mu = 0;
  t.B = 1;
  UniComponent big;
  big.source = GridFn({0.0, 1.0}, {10.0, 10.0});
  t.uni.emplace(1, std::move(big));
  CHECK(t.eval(std::vector<double>{0.5}) == 1.0);
  CHECK(t.eval_raw(std::vector<double>{0.5}.data()) == doctest::Approx(10.0));

  const double a = 0.8, b = 0.6;
  StructuredModel c = harmonic_model(3, {{1, a}}, {{{2, 3}, b}}, 0.1);
  for (int i = 0; i < 20; ++i) {
    const auto x = random_point(3, rng);
    const double direct = 0.1 + a * std::cos(2 * kPi * x[0]) +
                          b * std::cos(2 * kPi * x[1]) * std::cos(2 * kPi * 2 * x[2]);
    CHECK(c.eval(x) == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("truncation invariant holds for arbitrary models") {
  Rng rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    StructuredModel m = random_mlp_model(4, 100 + trial, /*B=*/0.5);
    for (int i = 0; i < 50; ++i) {
      const double v = m.eval(random_point(4, rng));
      CHECK(std::fabs(v) <= 0.5);
    }
  }
}

TEST_CASE("projection: identifiable model is a fixed point") {
  StructuredModel m = harmonic_model(3, {{1, 0.7}, {3, 0.4}}, {{{1, 2}, 0.5}}, 0.2);
  auto [proj, report] = anova_project(m, kRule);
  CHECK(report.max_uni_before() < 1e-12);
  CHECK(report.max_bi_before() < 1e-10);
  CHECK(report.max_uni_after() < 1e-12);
  CHECK(report.max_bi_after() < 1e-10);
  CHECK(std::fabs(report.intercept_shift) < 1e-12);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto x = random_point(3, rng);
    CHECK(proj.eval(x) == doctest::Approx(m.eval(x)).epsilon(1e-9));
  }
}

TEST_CASE("projection: constant univariate component moves into the intercept") {
  StructuredModel m;
  m.d = 2;
  m.mu = 0.1;
  m.B = 10;
  UniComponent c;
  c.source = GridFn({0.0, 1.0}, {0.65, 0.65});
  m.uni.emplace(1, std::move(c));
  auto [proj, report] = anova_project(m, kRule);
  CHECK(proj.mu == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(report.intercept_shift == doctest::Approx(0.65).epsilon(1e-12));
  for (double x : {0.0, 0.3, 0.9}) CHECK(std::fabs(proj.uni.at(1).eval(x)) < 1e-12);
}

TEST_CASE("projection: closed-form ANOVA of a linear bivariate source") {
  // g(x,y) = x + y decomposes exactly: uni parts x - 1/2 and y - 1/2,
  // intercept 1, bivariate remainder 0. Linear correctors interpolate
  // exactly, so every identity is sharp.
  StructuredModel m;
  m.d = 2;
  m.mu = 0;
  m.B = 10;
  BiComponent c;
  c.source = linear_net2(1.0, 1.0, 0.0);
  m.bi.emplace(std::make_pair(1, 2), std::move(c));

  auto [proj, report] = anova_project(m, kRule);
  CHECK(proj.mu == doctest::Approx(1.0).epsilon(1e-12));
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const double x = rng.uniform(), y = rng.uniform();
    CHECK(std::fabs(proj.bi.at({1, 2}).eval(x, y)) < 1e-11);
    CHECK(proj.uni.at(1).eval(x) == doctest::Approx(x - 0.5).epsilon(1e-11));
    CHECK(proj.uni.at(2).eval(y) == doctest::Approx(y - 0.5).epsilon(1e-11));
    const double pt[2] = {x, y};
    CHECK(proj.eval(pt) == doctest::Approx(x + y).epsilon(1e-11));
  }
  CHECK(report.max_uni_after() < 1e-9);
  CHECK(report.max_bi_after() < 1e-6);
}

TEST_CASE("projection: random models keep evaluation, kill defects, idempotent") {
  Rng rng(17);
  for (int trial = 0; trial < 4; ++trial) {
    const StructuredModel m = random_mlp_model(4, 5000 + trial);
    auto [proj, report] = anova_project(m, kRule);
    CHECK(report.max_uni_after() < 1e-9);
    CHECK(report.max_bi_after() < 1e-8);

    for (int i = 0; i < 1000; ++i) {
      const auto x = random_point(4, rng);
      CHECK(std::fabs(proj.eval(x) - m.eval(x)) < 1e-8);
    }

    auto [proj2, report2] = anova_project(proj, kRule);
    CHECK(report2.max_uni_after() < 1e-10);
    CHECK(report2.max_bi_after() < 1e-10);
    CHECK(std::fabs(report2.intercept_shift) < 1e-10);
    for (int i = 0; i < 200; ++i) {
      const auto x = random_point(4, rng);
      CHECK(std::fabs(proj2.eval(x) - proj.eval(x)) < 1e-10);
    }

    const AnovaReport defects = anova_defects(proj, kRule);
    CHECK(defects.max_uni_after() < 1e-9);
    CHECK(defects.max_bi_after() < 1e-8);
  }
}

TEST_CASE("component_l2_errors: zero distance, missing keys, scaling") {
  const StructuredModel truth =
      harmonic_model(2, {{1, std::sqrt(2.0)}, {2, 0.5}}, {{{1, 2}, 0.4}});

  const auto zero = component_l2_errors(truth, truth, kRule);
  for (const auto& [key, err] : zero) CHECK(err < 1e-10);

  StructuredModel empty;
  empty.d = 2;
  empty.B = 10;
  const auto errs = component_l2_errors(empty, truth, kRule);
  // || sqrt(2) cos(2 pi x) ||_2 = 1.
  CHECK(errs.at(ComponentKey::uni(1)) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(errs.at(ComponentKey::uni(2)) == doctest::Approx(0.5 / std::sqrt(2.0)).epsilon(1e-9));
  CHECK(errs.at(ComponentKey::bi(1, 2)) == doctest::Approx(0.4 / 2.0).epsilon(1e-9));

  // Doubling one component's deviation doubles only that key's error.
  const double a = 0.7, delta = 0.2;
  const StructuredModel base = harmonic_model(3, {{1, a}, {2, 0.5}}, {});
  const StructuredModel fitA = harmonic_model(3, {{1, a + delta}, {2, 0.5}}, {});
  const StructuredModel fitB = harmonic_model(3, {{1, a + 2 * delta}, {2, 0.5}}, {});
  const auto errA = component_l2_errors(fitA, base, kRule);
  const auto errB = component_l2_errors(fitB, base, kRule);
  CHECK(errA.at(ComponentKey::uni(1)) == doctest::Approx(delta / std::sqrt(2.0)).epsilon(1e-9));
  CHECK(errB.at(ComponentKey::uni(1)) ==
        doctest::Approx(2 * errA.at(ComponentKey::uni(1))).epsilon(1e-9));
  CHECK(errA.at(ComponentKey::uni(2)) < 1e-10);
  CHECK(errB.at(ComponentKey::uni(2)) < 1e-10);
}

TEST_CASE("component_l2_errors rejects non-identifiable inputs") {
  StructuredModel skew;
  skew.d = 2;
  skew.B = 10;
  UniComponent c;
  c.source = GridFn({0.0, 1.0}, {1.0, 1.0});  // integral 1, far above tolerance
  skew.uni.emplace(1, std::move(c));
  StructuredModel ok;
  ok.d = 2;
  ok.B = 10;
  CHECK_THROWS(component_l2_errors(skew, ok, kRule));
}

TEST_CASE("mc_l2_error: exact zero, constant gap, quadrature cross-oracle") {
  const StructuredModel truth = harmonic_model(2, {{1, 0.8}, {2, 0.6}}, {{{1, 2}, 0.5}});
  const McError self = mc_l2_error(truth, truth, 4000, 11);
  CHECK(self.estimate == 0.0);
  CHECK(self.std_error == 0.0);
  CHECK(self.n_mc == 4000);

  StructuredModel muA, muB;
  muA.d = 2;
  muA.mu = 0.4;
  muA.B = 10;
  muB.d = 2;
  muB.mu = 0.1;
  muB.B = 10;
  const McError gap = mc_l2_error(muA, muB, 1000, 5);
  CHECK(gap.estimate == doctest::Approx(0.09).epsilon(1e-12));
  CHECK(gap.std_error < 1e-12);

  StructuredModel empty;
  empty.d = 2;
  empty.B = 10;
  const McError mc = mc_l2_error(empty, truth, 200000, 29);
  const Quad2D rule2 = Quad2D::tensor(kRule, kRule);
  const double exact = integrate_2d(
      [&](double x, double y) {
        const double pt[2] = {x, y};
        const double v = truth.eval(pt);
        return v * v;
      },
      rule2);
  CHECK(std::fabs(mc.estimate - exact) <= 3 * mc.std_error + 1e-9);
  CHECK(mc.std_error > 0);
  CHECK_THROWS(mc_l2_error(empty, truth, 0, 1));
}

TEST_CASE("mc_l2_error is deterministic in the seed and law-sensitive") {
  const StructuredModel truth = harmonic_model(2, {{1, 0.8}}, {});
  StructuredModel empty;
  empty.d = 2;
  empty.B = 10;
  const McError a = mc_l2_error(empty, truth, 5000, 123);
  const McError b = mc_l2_error(empty, truth, 5000, 123);
  CHECK(a.estimate == b.estimate);
  CHECK(a.std_error == b.std_error);

  // Under Beta(2,2) the harmonic's mass near the edges is downweighted, so
  // the expectation differs from the uniform one.
  const McError c = mc_l2_error(empty, truth, 200000, 123, McLaw::independent_beta, 2.0, 2.0);
  CHECK(std::fabs(c.estimate - a.estimate) > 5 * (a.std_error + c.std_error));
}
