#ifndef MRF_AUDIT_HPP
#define MRF_AUDIT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrf/functionals.hpp"
#include "mrf/glauber.hpp"
#include "mrf/model.hpp"
#include "mrf/percolation.hpp"
#include "mrf/report.hpp"
#include "mrf/rng.hpp"

namespace mrf {

struct VarianceReport {
  double variance = 0.0;
  std::vector<double> martingale_terms;  // E(Delta_i^2), i = 1..N
  double dirichlet = 0.0;                // plain form E(f,f)
  double ratio = 0.0;                    // variance / dirichlet
  double delta_norm_sq = 0.0;

  double terms_sum() const {
    double s = 0.0;
    for (double t : martingale_terms) s += t;
    return s;
  }
};

/// Variance decomposition along the enumeration filtration:
/// Delta_i = E(f | F_i) - E(f | F_{i-1}), Var(f) = sum_i E(Delta_i^2).
/// All conditional expectations are exact prefix sums over the probability
/// vector.
inline VarianceReport martingale_decomposition(const ExactMeasure& m, const std::vector<double>& table) {
  const int n = m.sites();
  // cond[i] holds (numerator, mass) per prefix of length i.
  std::vector<std::vector<double>> num(n + 1), den(n + 1);
  num[n].resize(m.states());
  den[n].resize(m.states());
  for (std::size_t mask = 0; mask < m.states(); ++mask) {
    den[n][mask] = m.prob(static_cast<std::uint32_t>(mask));
    num[n][mask] = den[n][mask] * table[mask];
  }
  for (int i = n; i > 0; --i) {
    const std::size_t half = std::size_t{1} << (i - 1);
    num[i - 1].resize(half);
    den[i - 1].resize(half);
    for (std::size_t pfx = 0; pfx < half; ++pfx) {
      num[i - 1][pfx] = num[i][pfx] + num[i][pfx | half];
      den[i - 1][pfx] = den[i][pfx] + den[i][pfx | half];
    }
  }
  VarianceReport out;
  out.variance = m.variance(table);
  out.delta_norm_sq = delta_norm_sq(table, n);
  out.dirichlet = quadratic_form(m, table);
  out.ratio = (out.dirichlet > 0.0)
                  ? out.variance / out.dirichlet
                  : (out.variance > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  out.martingale_terms.resize(n);
  for (int i = 1; i <= n; ++i) {
    const std::size_t prev = std::size_t{1} << (i - 1);
    double term = 0.0;
    for (std::size_t pfx = 0; pfx < (std::size_t{1} << i); ++pfx) {
      if (den[i][pfx] <= 0.0) continue;
      const double gi = num[i][pfx] / den[i][pfx];
      const std::size_t parent = pfx & (prev - 1);
      const double gprev = num[i - 1][parent] / den[i - 1][parent];
      const double d = gi - gprev;
      term += den[i][pfx] * d * d;
    }
    out.martingale_terms[i - 1] = term;
  }
  return out;
}

struct UniformVarianceAudit {
  double worst_ratio = 0.0;  // max Var(f) / ||delta f||^2 over the battery
  int tested = 0;
  int skipped = 0;  // degenerate f with ||delta f||^2 = 0
};

inline UniformVarianceAudit uniform_variance_audit(const ExactMeasure& m,
                                                   const std::vector<std::vector<double>>& tables) {
  UniformVarianceAudit out;
  for (const auto& table : tables) {
    const double dn = delta_norm_sq(table, m.sites());
    if (dn <= 0.0) {
      ++out.skipped;
      continue;
    }
    ++out.tested;
    out.worst_ratio = std::max(out.worst_ratio, m.variance(table) / dn);
  }
  return out;
}

enum class Regime { theorem1, theorem2, weak, none };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::theorem1:
      return "theorem1";
    case Regime::theorem2:
      return "theorem2";
    case Regime::weak:
      return "weak";
    default:
      return "none";
  }
}

struct PercBudget {
  std::uint64_t samples = 100000;
  int cap = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct PoincareCertificate {
  Regime regime = Regime::none;
  double p = 0.0;
  double c = 0.0;
  double c_prime = 0.0;
  double x = 0.0;  // p (2d-1) e^c, the SAW series ratio
  MomentEstimate moment;  // K (theorem1) or K' (theorem2)
  double c_p = std::numeric_limits<double>::infinity();
  double delta = 0.0;
  double gap_lower_bound = 0.0;
};

/// Tries Theorem 1 (K envelope, C_P = e^{2c} K^2), then Theorem 2 (K'
/// envelope, C_P = e^{2c} K'^2), then the weak regime when p is subcritical.
/// The certificate always uses the conservative upper envelope of the Monte
/// Carlo moment.
inline PoincareCertificate poincare_certificate(const ModelParams& params, const PercBudget& budget) {
  params.validate();
  PoincareCertificate cert;
  cert.p = params.p_disagree();
  cert.c = params.c();
  cert.c_prime = params.c_prime();
  cert.x = cert.p * (2.0 * params.dim - 1.0) * std::exp(cert.c);
  cert.delta = RateFunction{params}.delta();
  Stream rng = derive_stream(budget.seed, "audit/certificate");
  if (cert.x < 1.0) {
    cert.moment = moment_K(cert.p, params.dim, cert.c, budget.cap, budget.samples, rng, budget.threads);
    const double env = cert.moment.upper_envelope();
    if (std::isfinite(env)) {
      cert.regime = Regime::theorem1;
      cert.c_p = std::exp(2.0 * cert.c) * env * env;
    }
  }
  if (cert.regime == Regime::none && racine2_sufficient(params)) {
    cert.moment =
        kprime_estimate(cert.p, params.dim, cert.c_prime, budget.cap, budget.samples, rng, budget.threads);
    const double env = cert.moment.upper_envelope();
    if (std::isfinite(env)) {
      cert.regime = Regime::theorem2;
      cert.c_p = std::exp(2.0 * cert.c) * env * env;
    }
  }
  if (cert.regime == Regime::none) {
    cert.c_p = std::numeric_limits<double>::infinity();
    cert.regime = (cert.p < site_percolation_pc(params.dim)) ? Regime::weak : Regime::none;
  }
  cert.gap_lower_bound = std::isfinite(cert.c_p) ? 2.0 * cert.delta / cert.c_p : 0.0;
  return cert;
}

struct PoincareAuditReport {
  std::vector<Assertion> assertions;
  double sharp_constant = 0.0;   // max Var/E over the battery
  double gap_constant = 0.0;     // M / gap, the rate-sandwich finite-box constant
  double exact_gap = 0.0;
};

/// Asserts Var(f) <= C_P E(f,f) for every f in the battery when the
/// certificate is finite, and records the sharp finite-box constant.
inline PoincareAuditReport poincare_audit(const ExactMeasure& m, const RateFunction& rates,
                                          const std::vector<std::vector<double>>& tables,
                                          const PoincareCertificate& cert, double tol = 1e-10) {
  PoincareAuditReport out;
  out.exact_gap = spectral_gap_exact(m, rates);
  out.gap_constant = rates.upper() / out.exact_gap;
  int idx = 0;
  for (const auto& table : tables) {
    const double var = m.variance(table);
    const double dir = quadratic_form(m, table);
    if (dir > 0.0) out.sharp_constant = std::max(out.sharp_constant, var / dir);
    if (std::isfinite(cert.c_p))
      out.assertions.push_back(
          check_leq("poincare f" + std::to_string(idx), var, cert.c_p * dir, tol));
    ++idx;
  }
  if (std::isfinite(cert.c_p))
    out.assertions.push_back(check_leq("gap_vs_2delta_over_cp", cert.gap_lower_bound, out.exact_gap, 1e-8));
  return out;
}

struct WeakPoincarePoint {
  int n = 0;        // truncation level N
  double k_n = 0.0; // K_N
  double tail = 0.0;  // E_p(|C|^2 1{|C| > N})
  double r = 0.0;     // 8 tail^2
  double alpha = 0.0; // 2 e^c K_N^2
};

struct WeakPoincareCurve {
  std::vector<WeakPoincarePoint> points;  // ascending in N
  bool fit_valid = false;
  double kappa = 0.0;   // -slope of log alpha vs log r
  double c_fit = 0.0;   // exp(intercept)
  double c_env = 0.0;   // max alpha r^kappa over the points, a valid envelope
  double r_squared = 0.0;
};

/// The section-6 curve: for each truncation N, the pair
/// (r, alpha) = (8 tail(N)^2, 2 e^c K_N^2) is a valid weak-Poincare budget.
/// Points with an empirically zero tail carry no log-log information and are
/// excluded from the fit.
inline WeakPoincareCurve weak_poincare_curve(const ModelParams& params, int n_lo, int n_hi,
                                             const PercBudget& budget) {
  params.validate();
  if (n_lo < 1 || n_hi < n_lo) throw std::invalid_argument("weak_poincare_curve: bad N range");
  const double p = params.p_disagree();
  if (p >= site_percolation_pc(params.dim))
    throw std::invalid_argument("weak_poincare_curve: supercritical disagreement probability");
  const double c = params.c();
  Stream rng = derive_stream(budget.seed, "audit/weak_poincare");
  const auto kn = k_n_curve(p, params.dim, c, n_hi, budget.samples, rng, budget.threads);
  std::vector<int> cuts;
  for (int n = n_lo; n <= n_hi; ++n) cuts.push_back(n);
  const int tail_cap = std::max(budget.cap, 4 * n_hi);
  const auto tails =
      tail_second_moment_curve(p, params.dim, cuts, budget.samples, rng, tail_cap, budget.threads);

  WeakPoincareCurve out;
  for (int n = n_lo; n <= n_hi; ++n) {
    WeakPoincarePoint pt;
    pt.n = n;
    pt.k_n = kn[n - 1].second;
    pt.tail = tails[n - n_lo].value;
    pt.r = 8.0 * pt.tail * pt.tail;
    pt.alpha = 2.0 * std::exp(c) * pt.k_n * pt.k_n;
    out.points.push_back(pt);
  }

  // Least-squares line through (log r, log alpha), zero-tail points dropped.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  int k = 0;
  for (const auto& pt : out.points) {
    if (pt.r <= 0.0 || pt.alpha <= 0.0) continue;
    const double lx = std::log(pt.r), ly = std::log(pt.alpha);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
    ++k;
  }
  if (k >= 3) {
    const double denom = k * sxx - sx * sx;
    if (denom > 0.0) {
      const double slope = (k * sxy - sx * sy) / denom;
      const double intercept = (sy - slope * sx) / k;
      out.kappa = -slope;
      out.c_fit = std::exp(intercept);
      const double ss_tot = syy - sy * sy / k;
      double ss_res = 0.0;
      for (const auto& pt : out.points) {
        if (pt.r <= 0.0 || pt.alpha <= 0.0) continue;
        const double e = std::log(pt.alpha) - (intercept + slope * std::log(pt.r));
        ss_res += e * e;
      }
      out.r_squared = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;
      out.fit_valid = out.kappa > 0.0;
      if (out.fit_valid) {
        for (const auto& pt : out.points)
          if (pt.r > 0.0) out.c_env = std::max(out.c_env, pt.alpha * std::pow(pt.r, out.kappa));
      }
    }
  }
  return out;
}

/// Closed-form power-law bound: alpha(r) <= C r^{-kappa} gives
/// xi(t) <= (1 + 1/kappa)^{1 + 1/kappa} (2 t delta / C)^{-1/kappa}.
inline double xi_power_law(double c_env, double kappa, double delta, double t) {
  if (kappa <= 0.0 || t <= 0.0) return std::numeric_limits<double>::infinity();
  const double q = 1.0 + 1.0 / kappa;
  return std::pow(q, q) * std::pow(2.0 * t * delta / c_env, -1.0 / kappa);
}

/// Numeric infimum over the curve points of
/// { r : -(1/delta) alpha(r) log r <= 2 t }; infinity when infeasible.
inline double xi_numeric(const WeakPoincareCurve& curve, double delta, double t) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& pt : curve.points) {
    if (pt.r <= 0.0) continue;
    const double lhs = -(1.0 / delta) * pt.alpha * std::log(pt.r);
    if (lhs <= 2.0 * t) best = std::min(best, pt.r);
  }
  return best;
}

/// xi(t): the tighter of the numeric infimum and the power-law envelope.
inline double xi_of_t(const WeakPoincareCurve& curve, double delta, double t) {
  double xi = xi_numeric(curve, delta, t);
  if (curve.fit_valid) xi = std::min(xi, xi_power_law(curve.c_env, curve.kappa, delta, t));
  return xi;
}

/// Var(S_t f) <= xi(t) (||f||_2^2 + 4 ||f||_inf^2) for mean-zero f across
/// the time grid.
inline std::vector<Assertion> weak_relaxation_audit(const ExactMeasure& m, const RateFunction& rates,
                                                    const std::vector<double>& table,
                                                    const WeakPoincareCurve& curve,
                                                    const std::vector<double>& t_grid,
                                                    double tol = 1e-10) {
  // Center f; the inequality concerns fluctuations.
  std::vector<double> f(table);
  const double mu = m.mean(f);
  for (double& v : f) v -= mu;
  double l2 = 0.0, linf = 0.0;
  for (std::size_t mask = 0; mask < f.size(); ++mask) {
    l2 += m.prob(static_cast<std::uint32_t>(mask)) * f[mask] * f[mask];
    linf = std::max(linf, std::abs(f[mask]));
  }
  const double budget = l2 + 4.0 * linf * linf;
  Semigroup s(m, rates);
  std::vector<Assertion> out;
  for (double t : t_grid) {
    const double var = m.variance(s.apply(t, f));
    const double xi = xi_of_t(curve, rates.delta(), t);
    out.push_back(check_leq("weak_relax t=" + std::to_string(t), var, xi * budget, tol));
  }
  return out;
}

}  // namespace mrf

#endif  // MRF_AUDIT_HPP
