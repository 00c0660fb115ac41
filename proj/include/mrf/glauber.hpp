#ifndef MRF_GLAUBER_HPP
#define MRF_GLAUBER_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mrf/functionals.hpp"
#include "mrf/model.hpp"
#include "mrf/rng.hpp"

namespace mrf {

/// Heat-bath flip rates c(x, sigma) = P(X_x = -sigma_x | rest), with their
/// uniform bounds delta <= c <= M.
struct RateFunction {
  ModelParams params;
  Boundary bc = Boundary::free;

  double delta() const { return 1.0 / (1.0 + std::exp(2.0 * params.beta * (params.h + 2.0 * params.dim))); }
  double upper() const { return 1.0 - delta(); }

  /// Boundary-adjusted neighbor sum seen by `rank` under mask `mask`.
  int neighbor_sum(const Enumeration& e, std::uint32_t mask, int rank) const {
    int s = 0;
    for (int n : e.neighbors(rank)) s += spin_of(mask, n);
    s += boundary_spin(bc) * (2 * params.dim - e.degree(rank));
    return s;
  }

  double rate_mask(const Enumeration& e, std::uint32_t mask, int rank) const {
    const int sx = spin_of(mask, rank);
    const int s = neighbor_sum(e, mask, rank);
    return 1.0 / (1.0 + std::exp(2.0 * params.beta * sx * (params.h + params.J * s)));
  }

  double rate(const SpinConfig& sigma, int rank) const {
    return rate_mask(*sigma.enumeration, sigma.to_mask(), rank);
  }
};

constexpr int kGeneratorMaxSites = 14;

/// Max over (sigma, x) of |c(x,sigma)P(sigma) - c(x,sigma^x)P(sigma^x)|.
inline double detailed_balance_audit(const ExactMeasure& m, const RateFunction& rates) {
  const Enumeration& e = m.enumeration();
  const int n = m.sites();
  double worst = 0.0;
  for (std::size_t mask = 0; mask < m.states(); ++mask) {
    const auto u = static_cast<std::uint32_t>(mask);
    for (int r = 1; r <= n; ++r) {
      const std::uint32_t flipped = u ^ (1u << (r - 1));
      const double v = std::abs(rates.rate_mask(e, u, r) * m.prob(u) -
                                rates.rate_mask(e, flipped, r) * m.prob(flipped));
      worst = std::max(worst, v);
    }
  }
  return worst;
}

/// Dense generator: L[sigma][sigma^x] = c(x, sigma), diagonal minus the row
/// sum, so rows sum to zero and pi L = 0 by detailed balance.
inline Eigen::MatrixXd generator(const ExactMeasure& m, const RateFunction& rates) {
  const int n = m.sites();
  if (n > kGeneratorMaxSites)
    throw CapacityError("generator: box of " + std::to_string(n) + " sites exceeds the dense cap " +
                        std::to_string(kGeneratorMaxSites));
  const Enumeration& e = m.enumeration();
  const auto dim = static_cast<Eigen::Index>(m.states());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index mask = 0; mask < dim; ++mask) {
    double total = 0.0;
    for (int r = 1; r <= n; ++r) {
      const double c = rates.rate_mask(e, static_cast<std::uint32_t>(mask), r);
      L(mask, mask ^ (Eigen::Index{1} << (r - 1))) = c;
      total += c;
    }
    L(mask, mask) = -total;
  }
  return L;
}

/// Spectral decomposition of -L in L^2(Pr), via the symmetrization
/// A = D^{1/2} (-L) D^{-1/2} with D = diag(P); A is symmetric with
/// off-diagonal -sqrt(c(x,sigma) c(x,sigma^x)).
class Semigroup {
 public:
  Semigroup(const ExactMeasure& m, const RateFunction& rates) {
    const int n = m.sites();
    if (n > kGeneratorMaxSites)
      throw CapacityError("Semigroup: box of " + std::to_string(n) + " sites exceeds the dense cap " +
                          std::to_string(kGeneratorMaxSites));
    const Enumeration& e = m.enumeration();
    const auto dim = static_cast<Eigen::Index>(m.states());
    sqrtp_.resize(dim);
    for (Eigen::Index mask = 0; mask < dim; ++mask)
      sqrtp_(mask) = std::sqrt(m.prob(static_cast<std::uint32_t>(mask)));
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index mask = 0; mask < dim; ++mask) {
      double total = 0.0;
      for (int r = 1; r <= n; ++r) {
        const Eigen::Index other = mask ^ (Eigen::Index{1} << (r - 1));
        const double c1 = rates.rate_mask(e, static_cast<std::uint32_t>(mask), r);
        const double c2 = rates.rate_mask(e, static_cast<std::uint32_t>(other), r);
        a(mask, other) = -std::sqrt(c1 * c2);
        total += c1;
      }
      a(mask, mask) = total;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    if (solver.info() != Eigen::Success) throw std::runtime_error("Semigroup: eigensolve failed");
    lambda_ = solver.eigenvalues();
    v_ = solver.eigenvectors();
  }

  /// Eigenvalues of -L, ascending; lambda(0) ~ 0.
  const Eigen::VectorXd& eigenvalues() const { return lambda_; }

  double gap() const { return lambda_(1); }

  /// e^{tL} f, exact through the eigendecomposition.
  std::vector<double> apply(double t, const std::vector<double>& f_table) const {
    const auto dim = static_cast<Eigen::Index>(f_table.size());
    Eigen::VectorXd g(dim);
    for (Eigen::Index i = 0; i < dim; ++i) g(i) = f_table[i] * sqrtp_(i);
    Eigen::VectorXd coef = v_.transpose() * g;
    for (Eigen::Index i = 0; i < dim; ++i) coef(i) *= std::exp(-t * lambda_(i));
    Eigen::VectorXd out = v_ * coef;
    std::vector<double> result(static_cast<std::size_t>(dim));
    for (Eigen::Index i = 0; i < dim; ++i) result[static_cast<std::size_t>(i)] = out(i) / sqrtp_(i);
    return result;
  }

 private:
  Eigen::VectorXd sqrtp_;
  Eigen::VectorXd lambda_;
  Eigen::MatrixXd v_;
};

/// Second-smallest eigenvalue of -L; the zero eigenvalue must be simple.
inline double spectral_gap_exact(const ExactMeasure& m, const RateFunction& rates) {
  Semigroup s(m, rates);
  if (std::abs(s.eigenvalues()(0)) > 1e-8)
    throw std::runtime_error("spectral_gap_exact: smallest eigenvalue is not zero");
  return s.gap();
}

struct DirichletForms {
  double plain = 0.0;  // E(f,f)  = sum_x int (grad_x f)^2 dPr
  double carre = 0.0;  // E_c(f,f) = sum_x int c(x,.) (grad_x f)^2 dPr
};

inline DirichletForms dirichlet_forms(const ExactMeasure& m, const RateFunction& rates,
                                      const std::vector<double>& table) {
  const Enumeration& e = m.enumeration();
  const int n = m.sites();
  DirichletForms out;
  for (std::size_t mask = 0; mask < table.size(); ++mask) {
    const auto u = static_cast<std::uint32_t>(mask);
    const double p = m.prob(u);
    for (int r = 1; r <= n; ++r) {
      const double g = grad_table(table, u, r);
      out.plain += p * g * g;
      out.carre += p * rates.rate_mask(e, u, r) * g * g;
    }
  }
  return out;
}

/// Uniformized continuous-time trajectory: Poisson(N M t) events, each picks
/// a uniform site and flips with probability c(x, sigma)/M.
inline std::uint32_t simulate_mask(const Enumeration& e, const RateFunction& rates, std::uint32_t mask,
                                   double t, Stream& rng) {
  if (t < 0.0) throw std::invalid_argument("simulate: t must be >= 0");
  const int n = e.size();
  const double big_m = rates.upper();
  const std::uint64_t events = rng.poisson(n * big_m * t);
  for (std::uint64_t k = 0; k < events; ++k) {
    const int r = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    if (rng.uniform() < rates.rate_mask(e, mask, r) / big_m) mask ^= 1u << (r - 1);
  }
  return mask;
}

inline SpinConfig simulate(const SpinConfig& sigma0, const RateFunction& rates, double t, Stream& rng) {
  const std::uint32_t out = simulate_mask(*sigma0.enumeration, rates, sigma0.to_mask(), t, rng);
  return SpinConfig::from_mask(sigma0.enumeration, out);
}

/// Inverse-CDF draw from the exact probability vector.
inline std::uint32_t sample_mask(const ExactMeasure& m, Stream& rng) {
  double u = rng.uniform();
  const std::size_t last = m.states() - 1;
  for (std::size_t mask = 0; mask < last; ++mask) {
    u -= m.prob(static_cast<std::uint32_t>(mask));
    if (u < 0.0) return static_cast<std::uint32_t>(mask);
  }
  return static_cast<std::uint32_t>(last);
}

enum class RelaxationMethod { exact_matrix, monte_carlo };

struct RelaxationCurve {
  std::vector<double> times;
  std::vector<double> variances;   // Var(S_t f)
  std::vector<double> std_errors;  // zero in exact mode
  RelaxationMethod method = RelaxationMethod::exact_matrix;
};

inline RelaxationCurve relaxation_curve_exact(const ExactMeasure& m, const RateFunction& rates,
                                              const std::vector<double>& table,
                                              const std::vector<double>& times) {
  Semigroup s(m, rates);
  RelaxationCurve out;
  out.method = RelaxationMethod::exact_matrix;
  out.times = times;
  for (double t : times) {
    out.variances.push_back(m.variance(s.apply(t, table)));
    out.std_errors.push_back(0.0);
  }
  return out;
}

/// Nested Monte Carlo estimate of Var(S_t f): outer replicas draw sigma_0
/// from the stationary law, inner replicas average f(sigma_t) to estimate
/// (S_t f)(sigma_0).  The naive variance of inner means overshoots by
/// E[inner var]/inner; the estimate subtracts that bias.
inline RelaxationCurve relaxation_curve_mc(const ExactMeasure& m, const RateFunction& rates,
                                           const Functional& f, const std::vector<double>& times,
                                           int outer, int inner, std::uint64_t seed, int threads = 1) {
  if (outer < 2 || inner < 1) throw std::invalid_argument("relaxation_curve_mc: need outer >= 2, inner >= 1");
  const Enumeration& e = m.enumeration();
  auto e_ptr = m.enumeration_ptr();
  RelaxationCurve out;
  out.method = RelaxationMethod::monte_carlo;
  out.times = times;
  const std::uint64_t base = hash_str(seed, "glauber/relaxation");
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    const double t = times[ti];
    struct Acc {
      Welford means;       // inner means mu_i
      Welford inner_vars;  // inner sample variances s_i^2
      double m4 = 0.0;     // running 4th central moment numerator of mu_i (post-hoc)
      std::vector<double> mus;
    };
    Acc acc = parallel_reduce<Acc>(
        static_cast<std::size_t>(outer), threads, Acc{},
        [&](Acc& a, std::size_t i) {
          Stream rng(hash_u64(hash_u64(base, ti), i));
          const std::uint32_t start = sample_mask(m, rng);
          Welford w;
          SpinConfig s = SpinConfig::from_mask(e_ptr, 0);
          for (int j = 0; j < inner; ++j) {
            const std::uint32_t endm = simulate_mask(e, rates, start, t, rng);
            for (int r = 1; r <= e.size(); ++r)
              s.values[r - 1] = static_cast<int8_t>(spin_of(endm, r));
            w.add(f(s));
          }
          a.means.add(w.mean());
          a.inner_vars.add(inner > 1 ? w.variance() : 0.0);
          a.mus.push_back(w.mean());
        },
        [](Acc& a, const Acc& b) {
          a.means.merge(b.means);
          a.inner_vars.merge(b.inner_vars);
          a.mus.insert(a.mus.end(), b.mus.begin(), b.mus.end());
        });
    const double var_of_means = acc.means.variance();
    const double bias = (inner > 1) ? acc.inner_vars.mean() / inner : 0.0;
    const double est = var_of_means - bias;
    // Standard error of the sample variance through the fourth central moment.
    const double mu = acc.means.mean();
    double m4 = 0.0;
    for (double v : acc.mus) {
      const double d = v - mu;
      m4 += d * d * d * d;
    }
    m4 /= static_cast<double>(acc.mus.size());
    const double s2 = var_of_means;
    const double var_var = std::max(0.0, m4 - s2 * s2) / static_cast<double>(acc.mus.size());
    out.variances.push_back(est);
    out.std_errors.push_back(std::sqrt(var_var));
  }
  return out;
}

struct ContractionAudit {
  double lhs = 0.0;  // ||e^{tL} f||_inf
  double rhs = 0.0;  // ||f||_inf
  bool pass = false;
};

inline ContractionAudit sup_contraction_audit(const ExactMeasure& m, const RateFunction& rates,
                                              const std::vector<double>& table, double t,
                                              double tol = 1e-10) {
  Semigroup s(m, rates);
  const std::vector<double> g = s.apply(t, table);
  ContractionAudit out;
  for (double v : table) out.rhs = std::max(out.rhs, std::abs(v));
  for (double v : g) out.lhs = std::max(out.lhs, std::abs(v));
  out.pass = out.lhs <= out.rhs + tol;
  return out;
}

}  // namespace mrf

#endif  // MRF_GLAUBER_HPP
