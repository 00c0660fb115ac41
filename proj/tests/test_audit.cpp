#include "doctest.h"
#include "mrf/audit.hpp"

#include <cmath>

using namespace mrf;

TEST_CASE("martingale decomposition identities") {
  auto e = std::make_shared<Enumeration>(Enumeration::box(2, 9));
  ModelParams params{2, 0.1, 0.2, 1};
  ExactMeasure m = ExactMeasure::build(params, e, Boundary::free);

  auto tconst = tabulate({[](const SpinConfig&) { return 5.0; }, std::nullopt}, e);
  VarianceReport rc = martingale_decomposition(m, tconst);
  CHECK(rc.variance <= 1e-14);
  for (double t : rc.martingale_terms) CHECK(t <= 1e-14);

  // f = sigma_{x_1}: resolved at filtration step 1.
  auto tspin = tabulate({[](const SpinConfig& s) { return static_cast<double>(s.spin(1)); },
                         std::nullopt},
                        e);
  VarianceReport rs = martingale_decomposition(m, tspin);
  const double mean_spin = m.mean(tspin);
  CHECK(rs.martingale_terms[0] == doctest::Approx(1.0 - mean_spin * mean_spin).epsilon(1e-10));
  for (std::size_t i = 1; i < rs.martingale_terms.size(); ++i)
    CHECK(rs.martingale_terms[i] <= 1e-12);

  for (int trial = 0; trial < 30; ++trial) {
    auto table = tabulate(random_multilinear(900 + trial, 3, *e), e);
    VarianceReport r = martingale_decomposition(m, table);
    CHECK(std::abs(r.variance - r.terms_sum()) <= 1e-10);
    CHECK(r.ratio >= 0.0);
  }
}

TEST_CASE("uniform variance audit") {
  auto e = std::make_shared<Enumeration>(Enumeration::box(2, 6));
  ModelParams p0{2, 0.0, 0.0, 1};
  ExactMeasure m = ExactMeasure::build(p0, e, Boundary::free);
  auto tspin = tabulate({[](const SpinConfig& s) { return static_cast<double>(s.spin(2)); },
                         std::nullopt},
                        e);
  auto tconst = tabulate({[](const SpinConfig&) { return 1.0; }, std::nullopt}, e);
  UniformVarianceAudit audit = uniform_variance_audit(m, {tspin, tconst});
  CHECK(audit.tested == 1);
  CHECK(audit.skipped == 1);
  CHECK(audit.worst_ratio == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("plain dirichlet form never beats the delta norm") {
  auto e = std::make_shared<Enumeration>(Enumeration::box(2, 6));
  ExactMeasure m = ExactMeasure::build(ModelParams{2, 0.2, 0.1, 1}, e, Boundary::free);
  for (int trial = 0; trial < 20; ++trial) {
    auto table = tabulate(random_multilinear(1100 + trial, 3, *e), e);
    CHECK(quadratic_form(m, table) <= delta_norm_sq(table, 6) + 1e-9);
  }
}

TEST_CASE("certificate regimes") {
  PercBudget budget{20000, 400, 17, 1};

  // beta = 0: K = 1, C_P = 1, gap bound 2 delta = 1.
  PoincareCertificate flat = poincare_certificate(ModelParams{2, 0.0, 0.0, 1}, budget);
  CHECK(flat.regime == Regime::theorem1);
  CHECK(flat.moment.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(flat.c_p == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(flat.gap_lower_bound == doctest::Approx(1.0).epsilon(1e-12));

  // Small beta: theorem 1 with x about 0.52.
  PoincareCertificate t1 = poincare_certificate(ModelParams{2, 0.01, 0.0, 1}, budget);
  CHECK(t1.regime == Regime::theorem1);
  CHECK(t1.x == doctest::Approx(0.52).epsilon(0.02));
  CHECK(std::isfinite(t1.c_p));
  CHECK(t1.gap_lower_bound > 0.0);

  // Large h: theorem 2 via the square-root condition.
  PoincareCertificate t2 = poincare_certificate(ModelParams{2, 0.1, 25.0, 1}, budget);
  CHECK(t2.regime == Regime::theorem2);
  CHECK(std::isfinite(t2.c_p));

  // Strong coupling: no certificate.
  PoincareCertificate none = poincare_certificate(ModelParams{2, 1.0, 0.0, 1}, budget);
  CHECK((none.regime == Regime::weak || none.regime == Regime::none));
  CHECK(std::isinf(none.c_p));
  CHECK(none.gap_lower_bound == 0.0);
}

TEST_CASE("poincare audit on a certified box") {
  auto e = std::make_shared<Enumeration>(Enumeration::box(2, 9));
  ModelParams params{2, 0.9 * threshold_koko(2), 0.0, 1};
  ExactMeasure m = ExactMeasure::build(params, e, Boundary::free);
  RateFunction rates{params};
  PercBudget budget{100000, 500, 19, 1};
  PoincareCertificate cert = poincare_certificate(params, budget);
  REQUIRE(cert.regime == Regime::theorem1);

  std::vector<std::vector<double>> tables;
  for (int trial = 0; trial < 50; ++trial)
    tables.push_back(tabulate(random_multilinear(1300 + trial, 3, *e), e));
  PoincareAuditReport report = poincare_audit(m, rates, tables, cert);
  for (const Assertion& a : report.assertions) CHECK(a.pass);
  CHECK(report.sharp_constant <= cert.c_p);
  CHECK(report.exact_gap >= cert.gap_lower_bound - 1e-8);
}

TEST_CASE("weak poincare curve shape and fit") {
  // p = 0.25 with the field chosen so the strong summability condition fails.
  ModelParams params{2, 0.025, 9.533528323661271, 1};
  PercBudget budget{100000, 1000, 23, 1};
  WeakPoincareCurve curve = weak_poincare_curve(params, 2, 20, budget);
  REQUIRE(curve.points.size() == 19);
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    CHECK(curve.points[i].k_n >= curve.points[i - 1].k_n);
    CHECK(curve.points[i].tail <= curve.points[i - 1].tail + 1e-12);
  }
  CHECK(curve.fit_valid);
  CHECK(curve.kappa > 0.0);
  CHECK(curve.r_squared >= 0.9);
  // The envelope really dominates the points.
  for (const auto& pt : curve.points)
    if (pt.r > 0.0) CHECK(pt.alpha <= curve.c_env * std::pow(pt.r, -curve.kappa) + 1e-9);

  // Supercritical p is rejected.
  CHECK_THROWS_AS(weak_poincare_curve(ModelParams{2, beta_for_p(0.7, 2), 0.0, 1}, 2, 5, budget),
                  std::invalid_argument);
}

TEST_CASE("xi: hand solves and monotonicity") {
  // Constant alpha = A on a fine r grid: threshold at r = e^{-2 t delta / A}.
  WeakPoincareCurve curve;
  const double a = 2.0, delta = 0.8;
  for (int i = 1; i <= 2000; ++i) {
    WeakPoincarePoint pt;
    pt.r = static_cast<double>(i) / 2000.0;
    pt.alpha = a;
    curve.points.push_back(pt);
  }
  const double t = 1.3;
  const double expect = std::exp(-2.0 * t * delta / a);
  CHECK(xi_numeric(curve, delta, t) == doctest::Approx(expect).epsilon(1e-3));

  // Closed-form power law: kappa = 1, C = 1, delta = 1, t = 2 -> 1.
  CHECK(xi_power_law(1.0, 1.0, 1.0, 2.0) == doctest::Approx(1.0).epsilon(1e-12));

  // Monotone in t.
  double prev = std::numeric_limits<double>::infinity();
  for (double tt : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    const double xi = xi_numeric(curve, delta, tt);
    CHECK(xi <= prev + 1e-15);
    prev = xi;
  }

  WeakPoincareCurve empty;
  CHECK(std::isinf(xi_numeric(empty, 1.0, 1.0)));
}

TEST_CASE("weak relaxation audit passes on a small box") {
  ModelParams params{2, beta_for_p(0.25, 2), 0.0, 1};
  auto e = std::make_shared<Enumeration>(Enumeration::box(2, 9));
  ExactMeasure m = ExactMeasure::build(params, e, Boundary::free);
  RateFunction rates{params};
  PercBudget budget{100000, 1000, 29, 1};
  WeakPoincareCurve curve = weak_poincare_curve(params, 2, 20, budget);
  auto table = tabulate(random_multilinear(1500, 3, *e), e);
  std::vector<Assertion> as = weak_relaxation_audit(m, rates, table, curve, {0.5, 1.0, 2.0, 4.0});
  for (const Assertion& a : as) CHECK(a.pass);
}
