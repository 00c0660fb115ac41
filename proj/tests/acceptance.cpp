// Acceptance battery: one numbered criterion per run line, [PASS]/[FAIL].
// Usage: acceptance [n ...]; with no arguments all criteria run.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include "mrf/audit.hpp"
#include "mrf/coupling.hpp"

using namespace mrf;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::shared_ptr<const Enumeration> box(int d, int n) {
  return std::make_shared<Enumeration>(Enumeration::box(d, n));
}

// 1. Martingale identity on a 9-site d=2 box across a (beta, h) grid.
Outcome criterion1() {
  Outcome out;
  auto e = box(2, 9);
  double worst = 0.0;
  for (double beta : {0.0, 0.05, 0.1}) {
    for (double h : {0.0, 0.5}) {
      ExactMeasure m = ExactMeasure::build(ModelParams{2, beta, h, 1}, e, Boundary::free);
      for (int trial = 0; trial < 50; ++trial) {
        auto table = tabulate(random_multilinear(10000 + trial, 3, *e), e);
        VarianceReport r = martingale_decomposition(m, table);
        worst = std::max(worst, std::abs(r.variance - r.terms_sum()));
      }
    }
  }
  out.require(worst <= 1e-10, "max identity gap " + std::to_string(worst));
  out.detail = "max |Var - sum E(Delta_i^2)| = " + std::to_string(worst);
  return out;
}

// 2. Radon-Nikodym flip bounds e^c and e^{|A| c}, exhaustive.
Outcome criterion2() {
  Outcome out;
  auto e = box(2, 9);
  double worst_margin = 1e300;
  for (double beta : {0.0, 0.05, 0.1}) {
    for (double h : {0.0, 0.5}) {
      ModelParams params{2, beta, h, 1};
      ExactMeasure m = ExactMeasure::build(params, e, Boundary::free);
      for (int r = 1; r <= 9; ++r) {
        const double bound = std::exp(params.c());
        out.require(m.rn_flip_sup(r) <= bound * (1.0 + 1e-12) + 1e-12, "single flip bound");
        worst_margin = std::min(worst_margin, bound - m.rn_flip_sup(r));
      }
      // All flip sets with |A| <= 3.
      for (std::uint32_t a = 1; a < (1u << 9); ++a) {
        const int sz = __builtin_popcount(a);
        if (sz > 3) continue;
        const double bound = std::exp(sz * params.c());
        out.require(m.rn_flipset_sup(a) <= bound * (1.0 + 1e-12) + 1e-12, "flip-set bound");
      }
    }
  }
  out.detail = "tightest single-flip margin " + std::to_string(worst_margin);
  return out;
}

// 3. Domination of the disagreement cluster by the percolation cluster,
// exact coupling-tree enumeration over every prefix, pivot, and connected
// A with |A| <= 3, both signs of J.
Outcome criterion3() {
  Outcome out;
  auto e = box(2, 9);
  double worst = 1e300;
  for (int J : {+1, -1}) {
    ModelParams params{2, 0.05, 0.0, J};
    ExactMeasure m = ExactMeasure::build(params, e, Boundary::free);
    const double p = params.p_disagree();
    for (int pivot = 1; pivot <= 9; ++pivot) {
      // Connected target sets holding the pivot, |A| <= 3.
      std::vector<std::vector<int>> sets;
      sets.push_back({pivot});
      for (std::uint32_t mask = 1; mask < (1u << 9); ++mask) {
        const int sz = __builtin_popcount(mask);
        if (sz < 2 || sz > 3 || !mask_bit(mask, pivot)) continue;
        std::vector<int> ranks;
        for (int r = 1; r <= 9; ++r)
          if (mask_bit(mask, r)) ranks.push_back(r);
        if (ranks_connected(ranks, *e)) sets.push_back(std::move(ranks));
      }
      std::vector<double> best(sets.size(), 0.0);
      for (std::uint32_t prefix = 0; prefix < (1u << (pivot - 1)); ++prefix) {
        // One tree walk per prefix; all target sets scored from its leaves.
        std::map<std::uint32_t, double> dis_law;
        enumerate_coupling_tree(m, pivot, prefix,
                                [&](double prob, std::uint32_t dis, std::uint32_t, std::uint32_t) {
                                  dis_law[dis] += prob;
                                });
        for (std::size_t s = 0; s < sets.size(); ++s) {
          std::uint32_t amask = 0;
          for (int r : sets[s]) amask |= 1u << (r - 1);
          double hit = 0.0;
          for (const auto& [dis, prob] : dis_law)
            if ((dis & amask) == amask) hit += prob;
          best[s] = std::max(best[s], hit);
        }
      }
      for (std::size_t s = 0; s < sets.size(); ++s) {
        std::vector<Site> sites;
        for (int r : sets[s]) {
          Site site = e->site(r);
          for (std::size_t k = 0; k < site.coords.size(); ++k)
            site.coords[k] -= e->site(pivot).coords[k];
          sites.push_back(std::move(site));
        }
        const double rhs = cluster_containment_prob(p, sites);
        out.require(best[s] <= rhs + 1e-10, "pivot " + std::to_string(pivot) + " |A|=" +
                                                std::to_string(sets[s].size()) + " J=" +
                                                std::to_string(J));
        worst = std::min(worst, rhs - best[s]);
      }
    }
  }
  out.detail = "min margin rhs - lhs = " + std::to_string(worst);
  return out;
}

// 4. Optimal-coupling disagreement below p(beta, h) on a parameter grid.
Outcome criterion4() {
  Outcome out;
  double worst = 1e300;
  for (double beta : {0.005, 0.02, 0.05, 0.1, 0.25}) {
    for (double h : {0.0, 0.3}) {
      for (int J : {+1, -1}) {
        ModelParams params{2, beta, h, J};
        const double tv = max_single_flip_tv(params);
        out.require(tv <= params.p_disagree() + 1e-12, "grid point");
        worst = std::min(worst, params.p_disagree() - tv);
      }
    }
  }
  out.detail = "min margin p - tv = " + std::to_string(worst);
  return out;
}

// 5. Gap 1 at beta = 0 for N in {1..10}; the 2 delta / C_P bound is tight.
Outcome criterion5() {
  Outcome out;
  double worst = 0.0;
  for (int n = 1; n <= 10; ++n) {
    auto e = box(2, n);
    ModelParams params{2, 0.0, 0.0, 1};
    ExactMeasure m = ExactMeasure::build(params, e, Boundary::free);
    const double gap = spectral_gap_exact(m, RateFunction{params});
    worst = std::max(worst, std::abs(gap - 1.0));
  }
  out.require(worst <= 1e-10, "gap deviates from 1 by " + std::to_string(worst));
  PoincareCertificate cert = poincare_certificate(ModelParams{2, 0.0, 0.0, 1}, PercBudget{});
  out.require(std::abs(cert.c_p - 1.0) <= 1e-12, "C_P != 1");
  out.require(std::abs(cert.gap_lower_bound - 1.0) <= 1e-12, "bound != 2 delta");
  out.detail = "max |gap - 1| = " + std::to_string(worst) + ", bound = " +
               std::to_string(cert.gap_lower_bound);
  return out;
}

// 6. Flagship: exact gap versus 2 delta / C_P with a Monte Carlo K envelope.
Outcome criterion6() {
  Outcome out;
  ModelParams params{2, 0.9 * threshold_koko(2), 0.0, 1};
  PercBudget budget{1000000, 300, 2026, 4};
  PoincareCertificate cert = poincare_certificate(params, budget);
  out.require(cert.regime == Regime::theorem1, "certificate regime");
  auto e = box(2, 12);
  ExactMeasure m = ExactMeasure::build(params, e, Boundary::free);
  const double gap = spectral_gap_exact(m, RateFunction{params});
  out.require(gap >= cert.gap_lower_bound - 1e-8, "gap below bound");
  out.detail = "gap = " + std::to_string(gap) + ", 2 delta / C_P = " +
               std::to_string(cert.gap_lower_bound) + ", K envelope = " +
               std::to_string(cert.moment.upper_envelope());
  return out;
}

// 7. Closed-form thresholds and the racine2 truth table.
Outcome criterion7() {
  Outcome out;
  out.require(std::abs(threshold_koko(2) - 0.0179795) <= 1e-6, "koko(2)");
  out.require(std::abs(threshold_koko(2) - std::log(4.0 / 3.0) / 16.0) <= 1e-15, "koko closed form");
  out.require(std::abs(std::atanh(0.25) - 0.2554128) <= 1e-6, "dobrushin boundary");
  out.require(dobrushin_ok(ModelParams{2, 0.1, 0.0, 1}), "dobrushin true case");
  out.require(!dobrushin_ok(ModelParams{2, 0.3, 0.0, 1}), "dobrushin false case");
  out.require(racine2_sufficient(ModelParams{2, 0.001, 0.0, 1}), "racine2 true at small beta");
  out.require(!racine2_sufficient(ModelParams{2, 0.1, 0.0, 1}), "racine2 false at h=0");
  out.require(racine2_sufficient(ModelParams{2, 0.1, 25.0, 1}), "racine2 true at large h");
  out.detail = "koko(2) = " + std::to_string(threshold_koko(2));
  return out;
}

// 8. Exponential relaxation below the gap envelope; Monte Carlo agreement.
Outcome criterion8() {
  Outcome out;
  auto e = box(2, 9);
  ModelParams params{2, 0.05, 0.0, 1};
  ExactMeasure m = ExactMeasure::build(params, e, Boundary::free);
  RateFunction rates{params};
  const double gap = spectral_gap_exact(m, rates);
  const std::vector<double> times = {0.25, 0.5, 1.0, 2.0, 4.0};
  double worst = -1e300;
  for (int trial = 0; trial < 20; ++trial) {
    auto table = tabulate(random_multilinear(20000 + trial, 3, *e), e);
    const double mu = m.mean(table);
    for (double& v : table) v -= mu;
    double l2 = 0.0;
    for (std::size_t mask = 0; mask < table.size(); ++mask)
      l2 += m.prob(static_cast<std::uint32_t>(mask)) * table[mask] * table[mask];
    RelaxationCurve curve = relaxation_curve_exact(m, rates, table, times);
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double excess = curve.variances[i] - std::exp(-gap * times[i]) * l2;
      worst = std::max(worst, excess);
      out.require(excess <= 1e-8, "envelope at t=" + std::to_string(times[i]));
    }
  }
  // Monte Carlo cross-check on one observable.
  Functional f{[](const SpinConfig& s) { return static_cast<double>(s.spin(1) + s.spin(5)); },
               std::nullopt};
  auto table = tabulate(f, e);
  const std::vector<double> tmc = {0.5, 2.0};
  RelaxationCurve exact = relaxation_curve_exact(m, rates, table, tmc);
  RelaxationCurve mc = relaxation_curve_mc(m, rates, f, tmc, 6000, 16, 2027, 4);
  for (std::size_t i = 0; i < tmc.size(); ++i)
    out.require(std::abs(mc.variances[i] - exact.variances[i]) <= 3.0 * mc.std_errors[i],
                "monte carlo at t=" + std::to_string(tmc[i]));
  out.detail = "worst envelope excess = " + std::to_string(worst);
  return out;
}

// 9. Run-counting example at beta = 0: the claimed Dirichlet bounds and the
// separation of the uniform and Poincare variance inequalities.
Outcome criterion9() {
  Outcome out;
  ModelParams params{1, 0.0, 0.0, 1};
  double worst_form = -1e300, worst_site = -1e300;
  for (int n : {6, 10, 14}) {
    auto e = box(1, n);
    ExactMeasure m = ExactMeasure::build(params, e, Boundary::free);
    for (int k = 1; k <= std::min(4, n - 1); ++k) {
      auto table = tabulate(run_count(RunCountSpec{k, 0, n}, *e), e);
      const double theta_k = std::pow(0.5, k);
      const double form = quadratic_form(m, table);
      worst_form = std::max(worst_form, form - 2.0 * k * (n - k) * theta_k);
      out.require(form <= 2.0 * k * (n - k) * theta_k + 1e-10,
                  "E(f,f) bound n=" + std::to_string(n) + " k=" + std::to_string(k));
      for (int r = 1; r <= n; ++r) {
        const double site = quadratic_form_site(m, table, r);
        worst_site = std::max(worst_site, site - 2.0 * k * theta_k);
        out.require(site <= 2.0 * k * theta_k + 1e-10,
                    "per-site bound n=" + std::to_string(n) + " k=" + std::to_string(k));
      }
    }
  }
  // Separation of the two variance inequalities on the largest window.
  {
    const int n = 14;
    auto e = box(1, n);
    ExactMeasure m = ExactMeasure::build(params, e, Boundary::free);
    std::vector<double> poincare_ratio, uniform_ratio;
    for (int k = 1; k <= 4; ++k) {
      auto table = tabulate(run_count(RunCountSpec{k, 0, n}, *e), e);
      const double var = m.variance(table);
      poincare_ratio.push_back(var / quadratic_form(m, table));
      uniform_ratio.push_back(var / delta_norm_sq(table, n));
    }
    for (double v : poincare_ratio) out.require(v > 0.01 && v < 10.0, "Var/E out of range");
    for (std::size_t i = 1; i < uniform_ratio.size(); ++i)
      out.require(uniform_ratio[i] < uniform_ratio[i - 1], "Var/||delta f||^2 not decreasing");
    out.require(uniform_ratio.back() < uniform_ratio.front() / 5.0,
                "Var/||delta f||^2 not collapsing");
    out.detail = "worst form excess = " + std::to_string(worst_form) +
                 ", worst per-site excess = " + std::to_string(worst_site) +
                 ", Var/E k=1..4 = " + std::to_string(poincare_ratio.front()) + ".." +
                 std::to_string(poincare_ratio.back()) + ", Var/||d||^2 = " +
                 std::to_string(uniform_ratio.front()) + ".." +
                 std::to_string(uniform_ratio.back());
  }
  return out;
}

// 10. Weak-Poincare curve at percolation p = 0.25 and its relaxation audit.
Outcome criterion10() {
  Outcome out;
  // p(beta, h) = 0.25 with h > 0 so that the summability condition of the
  // strong inequality fails (p (2d-1) e^c > 1) and the weak regime is the
  // operative one: h = ln(2 sinh(8 beta) / p) / (2 beta).
  ModelParams params{2, 0.025, 9.533528323661271, 1};
  PercBudget budget{100000, 2000, 2028, 4};
  WeakPoincareCurve curve = weak_poincare_curve(params, 2, 20, budget);
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    out.require(curve.points[i].k_n >= curve.points[i - 1].k_n, "K_N not nondecreasing");
    out.require(curve.points[i].tail <= curve.points[i - 1].tail + 1e-12, "tail not decreasing");
  }
  out.require(curve.fit_valid && curve.kappa > 0.0, "kappa <= 0");
  out.require(curve.r_squared >= 0.9, "fit R^2 = " + std::to_string(curve.r_squared));

  auto e = box(2, 9);
  ExactMeasure m = ExactMeasure::build(params, e, Boundary::free);
  RateFunction rates{params};
  auto table = tabulate(random_multilinear(30000, 3, *e), e);
  std::vector<Assertion> as = weak_relaxation_audit(m, rates, table, curve, {0.5, 1.0, 2.0, 4.0});
  for (const Assertion& a : as) out.require(a.pass, a.name);
  out.detail = "kappa = " + std::to_string(curve.kappa) + ", R^2 = " +
               std::to_string(curve.r_squared);
  return out;
}

// 11. Sup-norm contraction of the semigroup.
Outcome criterion11() {
  Outcome out;
  auto e = box(2, 9);
  ModelParams params{2, 0.1, 0.1, 1};
  ExactMeasure m = ExactMeasure::build(params, e, Boundary::free);
  Semigroup s(m, RateFunction{params});
  double worst = -1e300;
  for (int trial = 0; trial < 100; ++trial) {
    auto table = tabulate(random_multilinear(40000 + trial, 4, *e), e);
    double sup = 0.0;
    for (double v : table) sup = std::max(sup, std::abs(v));
    for (double t : {0.1, 1.0, 10.0}) {
      const std::vector<double> g = s.apply(t, table);
      double gsup = 0.0;
      for (double v : g) gsup = std::max(gsup, std::abs(v));
      worst = std::max(worst, gsup - sup);
      out.require(gsup <= sup + 1e-10, "t=" + std::to_string(t));
    }
  }
  out.detail = "worst sup-norm excess = " + std::to_string(worst);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using Criterion = Outcome (*)();
  const std::vector<std::pair<const char*, Criterion>> all = {
      {"martingale identity", criterion1},
      {"flip-bound audit", criterion2},
      {"domination", criterion3},
      {"per-site coupling bound", criterion4},
      {"spectral gap at beta=0", criterion5},
      {"flagship gap cross-check", criterion6},
      {"thresholds", criterion7},
      {"relaxation", criterion8},
      {"run-counting example", criterion9},
      {"weak-poincare curve", criterion10},
      {"contraction", criterion11},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) {
    const int n = std::atoi(argv[i]);
    if (n < 1 || n > static_cast<int>(all.size())) {
      std::fprintf(stderr, "usage: acceptance [1..%zu ...]\n", all.size());
      return 2;
    }
    wanted.push_back(n);
  }
  if (wanted.empty())
    for (int n = 1; n <= static_cast<int>(all.size()); ++n) wanted.push_back(n);

  bool ok = true;
  for (int n : wanted) {
    const auto& [name, fn] = all[static_cast<std::size_t>(n - 1)];
    Outcome o = fn();
    std::printf("[%s] criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", n, name,
                o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ok = false;
  }
  return ok ? 0 : 1;
}
