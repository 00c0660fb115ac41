#ifndef MRF_FUNCTIONALS_HPP
#define MRF_FUNCTIONALS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mrf/model.hpp"
#include "mrf/rng.hpp"

namespace mrf {

/// A real observable of a spin configuration.  Exact sweeps tabulate the
/// evaluator over all 2^N states, so mask-level helpers below operate on
/// tables.
struct Functional {
  std::function<double(const SpinConfig&)> eval;
  std::optional<std::vector<int>> support_hint;  // ranks, if known

  double operator()(const SpinConfig& s) const { return eval(s); }
};

/// f over every configuration of the box, indexed by mask.
inline std::vector<double> tabulate(const Functional& f, std::shared_ptr<const Enumeration> e) {
  const int n = e->size();
  const std::size_t nconf = std::size_t{1} << n;
  std::vector<double> table(nconf);
  SpinConfig s = SpinConfig::from_mask(e, 0);
  for (std::size_t mask = 0; mask < nconf; ++mask) {
    for (int r = 1; r <= n; ++r)
      s.values[r - 1] = static_cast<int8_t>(spin_of(static_cast<std::uint32_t>(mask), r));
    table[mask] = f.eval(s);
  }
  return table;
}

/// Discrete derivative f(sigma^x) - f(sigma).
inline double grad(const Functional& f, const SpinConfig& sigma, int rank) {
  SpinConfig flipped = sigma;
  flipped.flip(rank);
  return f(flipped) - f(sigma);
}

/// f(sigma^A) - f(sigma) for a set of ranks.
inline double grad_set(const Functional& f, const SpinConfig& sigma, const std::vector<int>& ranks) {
  SpinConfig flipped = sigma;
  flipped.flip_set(ranks);
  return f(flipped) - f(sigma);
}

inline double grad_table(const std::vector<double>& table, std::uint32_t mask, int rank) {
  return table[mask ^ (1u << (rank - 1))] - table[mask];
}

/// Variation delta_x f = sup_sigma (f(sigma^x) - f(sigma)).
/// Exact by enumeration of the table.
inline double variation(const std::vector<double>& table, int rank) {
  const std::uint32_t bit = 1u << (rank - 1);
  double best = 0.0;
  for (std::size_t mask = 0; mask < table.size(); ++mask)
    best = std::max(best, table[mask ^ bit] - table[mask]);
  return best;
}

struct SampledVariation {
  double lower_bound;  // sup over the visited sample only
  bool exact = false;
};

/// Sampled variation: a lower bound for the sup, flagged as such.
inline SampledVariation variation_sampled(const Functional& f, std::shared_ptr<const Enumeration> e,
                                          int rank, int samples, Stream& rng) {
  const int n = e->size();
  double best = 0.0;
  for (int k = 0; k < samples; ++k) {
    std::uint32_t mask = 0;
    for (int r = 1; r <= n; ++r)
      if (rng.bernoulli(0.5)) mask |= 1u << (r - 1);
    SpinConfig s = SpinConfig::from_mask(e, mask);
    best = std::max(best, grad(f, s, rank));
  }
  return {best, false};
}

/// ||delta f||_2^2 = sum_x (delta_x f)^2, exact.
inline double delta_norm_sq(const std::vector<double>& table, int n_sites) {
  double s = 0.0;
  for (int r = 1; r <= n_sites; ++r) {
    const double v = variation(table, r);
    s += v * v;
  }
  return s;
}

/// Plain quadratic form E(f,f) = sum_x integral (grad_x f)^2 dPr.
inline double quadratic_form(const ExactMeasure& m, const std::vector<double>& table) {
  double s = 0.0;
  const int n = m.sites();
  for (std::size_t mask = 0; mask < table.size(); ++mask) {
    double acc = 0.0;
    for (int r = 1; r <= n; ++r) {
      const double g = grad_table(table, static_cast<std::uint32_t>(mask), r);
      acc += g * g;
    }
    s += m.prob(static_cast<std::uint32_t>(mask)) * acc;
  }
  return s;
}

/// Per-site integral (grad_r f)^2 dPr.
inline double quadratic_form_site(const ExactMeasure& m, const std::vector<double>& table, int rank) {
  double s = 0.0;
  for (std::size_t mask = 0; mask < table.size(); ++mask) {
    const double g = grad_table(table, static_cast<std::uint32_t>(mask), rank);
    s += m.prob(static_cast<std::uint32_t>(mask)) * g * g;
  }
  return s;
}

/// A run-counting observable along one lattice axis.
struct RunCountSpec {
  int k = 1;       // run parameter: counts intervals of k+1 consecutive +1
  int axis = 0;    // lattice direction
  int window = 2;  // n sites along the line through the origin
};

/// Ranks of the window sites, ordered by coordinate along the axis.
inline std::vector<int> line_window(const Enumeration& e, int axis, int window) {
  if (axis < 0 || axis >= e.dim()) throw std::invalid_argument("line_window: bad axis");
  std::vector<std::pair<int, int>> found;  // (coordinate, rank)
  for (int r = 1; r <= e.size(); ++r) {
    const Site& s = e.site(r);
    bool on_line = true;
    for (int a = 0; a < e.dim(); ++a)
      if (a != axis && s.coords[a] != 0) on_line = false;
    if (on_line) found.emplace_back(s.coords[axis], r);
  }
  std::sort(found.begin(), found.end());
  if (static_cast<int>(found.size()) < window)
    throw std::invalid_argument("line_window: window does not fit in the box");
  // Keep a contiguous stretch of `window` coordinates containing 0.
  int start = 0;
  for (std::size_t i = 0; i + window <= found.size(); ++i) {
    bool contiguous = true;
    for (int j = 1; j < window; ++j)
      if (found[i + j].first != found[i].first + j) contiguous = false;
    if (contiguous && found[i].first <= 0 && found[i + window - 1].first >= 0) {
      start = static_cast<int>(i);
      break;
    }
  }
  std::vector<int> ranks(window);
  for (int j = 0; j < window; ++j) ranks[j] = found[start + j].second;
  return ranks;
}

/// f_k: the number of positions i in [1, n-k] with k+1 consecutive plus
/// spins starting at i along the window.
inline Functional run_count(const RunCountSpec& spec, const Enumeration& e) {
  if (spec.k < 1 || spec.k >= spec.window)
    throw std::invalid_argument("run_count: need 1 <= k < window");
  std::vector<int> ranks = line_window(e, spec.axis, spec.window);
  const int k = spec.k;
  Functional f;
  f.support_hint = ranks;
  f.eval = [ranks, k](const SpinConfig& s) {
    const int n = static_cast<int>(ranks.size());
    int count = 0;
    for (int i = 0; i + k < n; ++i) {
      bool all_plus = true;
      for (int j = i; j <= i + k; ++j)
        if (s.spin(ranks[j]) < 0) {
          all_plus = false;
          break;
        }
      if (all_plus) ++count;
    }
    return static_cast<double>(count);
  };
  return f;
}

/// Empirical cylinder constant: max over cylinder events of length n <= n_max
/// along the window of P(cylinder)^{1/n}.
inline double soliboze_theta(const ExactMeasure& m, int n_max, int axis = 0) {
  const Enumeration& e = m.enumeration();
  const int total = e.size();
  std::vector<int> window = line_window(e, axis, std::min(n_max, total));
  const int nw = static_cast<int>(window.size());
  double theta = 0.0;
  for (int n = 1; n <= nw; ++n) {
    // Cylinders over the first n window sites.
    for (std::uint32_t pattern = 0; pattern < (1u << n); ++pattern) {
      double prob = 0.0;
      for (std::size_t mask = 0; mask < m.states(); ++mask) {
        bool match = true;
        for (int j = 0; j < n; ++j) {
          const bool want_plus = (pattern >> j) & 1u;
          if (mask_bit(static_cast<std::uint32_t>(mask), window[j]) != want_plus) {
            match = false;
            break;
          }
        }
        if (match) prob += m.prob(static_cast<std::uint32_t>(mask));
      }
      theta = std::max(theta, std::pow(prob, 1.0 / n));
    }
  }
  return theta;
}

/// Seeded random multilinear polynomial in the spins with bounded degree;
/// spans low- and high-frequency generator eigenmodes.
inline Functional random_multilinear(std::uint64_t seed, int degree, const Enumeration& e) {
  if (degree < 1) throw std::invalid_argument("random_multilinear: degree must be >= 1");
  const int n = e.size();
  Stream rng = derive_stream(seed, "functionals/random_multilinear");
  const int n_terms = 2 * n;
  std::vector<std::pair<double, std::vector<int>>> terms;
  terms.reserve(n_terms);
  for (int t = 0; t < n_terms; ++t) {
    const int sz = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(degree, n))));
    std::vector<int> ranks;
    while (static_cast<int>(ranks.size()) < sz) {
      const int r = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      if (std::find(ranks.begin(), ranks.end(), r) == ranks.end()) ranks.push_back(r);
    }
    std::sort(ranks.begin(), ranks.end());
    terms.emplace_back(rng.normal(), std::move(ranks));
  }
  Functional f;
  f.eval = [terms](const SpinConfig& s) {
    double acc = 0.0;
    for (const auto& [coef, ranks] : terms) {
      double prod = coef;
      for (int r : ranks) prod *= s.spin(r);
      acc += prod;
    }
    return acc;
  };
  return f;
}

}  // namespace mrf

#endif  // MRF_FUNCTIONALS_HPP
