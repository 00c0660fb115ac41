#ifndef MRF_MODEL_HPP
#define MRF_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrf/lattice.hpp"

namespace mrf {

/// Thrown when a box exceeds the brute-force enumeration cap.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Ising model parameters.  h >= 0 and |J| = 1; derived constants:
///   c  = 2*beta*h + 4*beta*d   (single-flip Radon-Nikodym bound exp(c))
///   c' = 4*beta*d
///   p  = exp(-2*beta*h) * (exp(4*beta*d) - exp(-4*beta*d))
struct ModelParams {
  int dim = 2;
  double beta = 0.0;
  double h = 0.0;
  int J = +1;

  void validate() const {
    if (dim < 1) throw std::invalid_argument("ModelParams: dim must be >= 1");
    if (!(beta >= 0.0)) throw std::invalid_argument("ModelParams: beta must be >= 0");
    if (!(h >= 0.0)) throw std::invalid_argument("ModelParams: h must be >= 0");
    if (J != 1 && J != -1) throw std::invalid_argument("ModelParams: J must be +1 or -1");
  }

  double c() const { return 2.0 * beta * h + 4.0 * beta * dim; }
  double c_prime() const { return 4.0 * beta * dim; }
  double p_disagree() const {
    return std::exp(-2.0 * beta * h) * (std::exp(4.0 * beta * dim) - std::exp(-4.0 * beta * dim));
  }
};

enum class Boundary { free, plus, minus };

inline int boundary_spin(Boundary b) {
  switch (b) {
    case Boundary::plus:
      return +1;
    case Boundary::minus:
      return -1;
    default:
      return 0;
  }
}

inline const char* boundary_name(Boundary b) {
  switch (b) {
    case Boundary::plus:
      return "plus";
    case Boundary::minus:
      return "minus";
    default:
      return "free";
  }
}

inline Boundary boundary_from_name(const std::string& s) {
  if (s == "free") return Boundary::free;
  if (s == "plus") return Boundary::plus;
  if (s == "minus") return Boundary::minus;
  throw std::invalid_argument("unknown boundary: " + s);
}

/// P(X_x = +1 | neighbor sum S) = e^{beta h + beta J S} / 2cosh(beta h + beta J S).
inline double conditional_plus_prob(const ModelParams& params, int neighbor_sum) {
  if (std::abs(neighbor_sum) > 2 * params.dim)
    throw std::invalid_argument("conditional_plus_prob: |S| > 2d");
  const double u = params.beta * params.h + params.beta * params.J * neighbor_sum;
  return 1.0 / (1.0 + std::exp(-2.0 * u));
}

/// A +/-1 assignment on an enumerated box.
struct SpinConfig {
  std::shared_ptr<const Enumeration> enumeration;
  std::vector<int8_t> values;  // values[rank-1] in {-1,+1}

  static SpinConfig from_mask(std::shared_ptr<const Enumeration> e, std::uint32_t mask) {
    SpinConfig s;
    s.enumeration = std::move(e);
    const int n = s.enumeration->size();
    s.values.resize(n);
    for (int r = 1; r <= n; ++r) s.values[r - 1] = static_cast<int8_t>(spin_of(mask, r));
    return s;
  }

  std::uint32_t to_mask() const {
    std::uint32_t m = 0;
    for (std::size_t k = 0; k < values.size(); ++k)
      if (values[k] > 0) m |= 1u << k;
    return m;
  }

  int spin(int rank) const { return values.at(rank - 1); }

  void flip(int rank) { values.at(rank - 1) = static_cast<int8_t>(-values[rank - 1]); }

  void flip_set(const std::vector<int>& ranks) {
    for (int r : ranks) flip(r);
  }
};

/// Full probability vector of a finite-box Gibbs measure: the brute-force
/// oracle behind all exact audits.  Mask convention: bit k = spin of rank
/// k+1, set = +1.
class ExactMeasure {
 public:
  static constexpr int kDefaultMaxSites = 24;

  static ExactMeasure build(const ModelParams& params, std::shared_ptr<const Enumeration> enumeration,
                            Boundary bc, int max_sites = kDefaultMaxSites) {
    params.validate();
    if (params.dim != enumeration->dim())
      throw std::invalid_argument("ExactMeasure: params.dim does not match the box");
    const int n = enumeration->size();
    if (n > max_sites)
      throw CapacityError("ExactMeasure: box of " + std::to_string(n) + " sites exceeds cap " +
                          std::to_string(max_sites));
    ExactMeasure m;
    m.params_ = params;
    m.enumeration_ = std::move(enumeration);
    m.bc_ = bc;
    const Enumeration& e = *m.enumeration_;

    // Bonds inside the box, each once.
    std::vector<std::pair<int, int>> bonds;
    for (int r = 1; r <= n; ++r)
      for (int s : e.neighbors(r))
        if (s > r) bonds.emplace_back(r, s);

    // Per-site field term: h plus the boundary contribution of the 2d-deg(r)
    // missing neighbors.
    std::vector<double> field(n + 1);
    const int bspin = boundary_spin(bc);
    for (int r = 1; r <= n; ++r) {
      const int missing = 2 * params.dim - e.degree(r);
      field[r] = params.h + params.J * bspin * missing;
    }

    const std::size_t nconf = std::size_t{1} << n;
    std::vector<double> logw(nconf);
    double maxlog = -1e300;
    for (std::size_t mask = 0; mask < nconf; ++mask) {
      double energy = 0.0;
      for (auto [r, s] : bonds)
        energy += params.J * spin_of(static_cast<std::uint32_t>(mask), r) *
                  spin_of(static_cast<std::uint32_t>(mask), s);
      for (int r = 1; r <= n; ++r) energy += field[r] * spin_of(static_cast<std::uint32_t>(mask), r);
      logw[mask] = params.beta * energy;
      maxlog = std::max(maxlog, logw[mask]);
    }
    m.probs_.resize(nconf);
    double z = 0.0;
    for (std::size_t mask = 0; mask < nconf; ++mask) {
      m.probs_[mask] = std::exp(logw[mask] - maxlog);
      z += m.probs_[mask];
    }
    for (double& p : m.probs_) p /= z;
    return m;
  }

  const ModelParams& params() const { return params_; }
  const Enumeration& enumeration() const { return *enumeration_; }
  std::shared_ptr<const Enumeration> enumeration_ptr() const { return enumeration_; }
  Boundary boundary() const { return bc_; }
  int sites() const { return enumeration_->size(); }
  std::size_t states() const { return probs_.size(); }
  const std::vector<double>& probs() const { return probs_; }
  double prob(std::uint32_t mask) const { return probs_[mask]; }

  /// Neighbor sum seen by `rank` in configuration `mask`, boundary-adjusted.
  int neighbor_sum(std::uint32_t mask, int rank) const {
    const Enumeration& e = *enumeration_;
    int s = 0;
    for (int n : e.neighbors(rank)) s += spin_of(mask, n);
    s += boundary_spin(bc_) * (2 * params_.dim - e.degree(rank));
    return s;
  }

  /// Exact conditional law of the suffix ranks [i+1, N] given the prefix
  /// [1, i] fixed to the low i bits of `prefix_vals`.  Indexed by suffix
  /// mask (bit k = rank i+1+k).
  std::vector<double> conditional_suffix(int i, std::uint32_t prefix_vals) const {
    const int n = sites();
    if (i < 0 || i > n) throw std::invalid_argument("conditional_suffix: bad prefix length");
    const std::uint32_t prefix_mask = (i == 32) ? ~0u : ((1u << i) - 1u);
    const std::uint32_t fixed = prefix_vals & prefix_mask;
    const std::size_t nrest = std::size_t{1} << (n - i);
    std::vector<double> out(nrest);
    double z = 0.0;
    for (std::size_t rest = 0; rest < nrest; ++rest) {
      out[rest] = probs_[fixed | (rest << i)];
      z += out[rest];
    }
    if (z <= 0.0) throw std::runtime_error("conditional_suffix: zero-probability conditioning");
    for (double& p : out) p /= z;
    return out;
  }

  /// P(X_rank = +1 | spins on fixed_set equal fixed_vals), the remaining
  /// sites marginalized.  fixed_set must not contain rank.
  double marginal_plus(std::uint32_t fixed_set, std::uint32_t fixed_vals, int rank) const {
    const std::uint32_t bit = 1u << (rank - 1);
    if (fixed_set & bit) throw std::invalid_argument("marginal_plus: target inside fixed set");
    const int n = sites();
    std::vector<int> free_bits;
    for (int k = 0; k < n; ++k) {
      const std::uint32_t b = 1u << k;
      if (!(fixed_set & b) && b != bit) free_bits.push_back(k);
    }
    const std::uint32_t base = fixed_vals & fixed_set;
    double wplus = 0.0, wminus = 0.0;
    const std::size_t nfree = std::size_t{1} << free_bits.size();
    for (std::size_t sub = 0; sub < nfree; ++sub) {
      std::uint32_t idx = base;
      for (std::size_t k = 0; k < free_bits.size(); ++k)
        if ((sub >> k) & 1u) idx |= 1u << free_bits[k];
      wminus += probs_[idx];
      wplus += probs_[idx | bit];
    }
    return wplus / (wplus + wminus);
  }

  /// max over sigma of P(sigma^x) / P(sigma); bounded by exp(c).
  double rn_flip_sup(int rank) const {
    const std::uint32_t bit = 1u << (rank - 1);
    double best = 0.0;
    for (std::size_t mask = 0; mask < probs_.size(); ++mask)
      best = std::max(best, probs_[mask ^ bit] / probs_[mask]);
    return best;
  }

  /// max over sigma of P(sigma^A) / P(sigma) with A given as a rank bitmask;
  /// bounded by exp(|A| c).
  double rn_flipset_sup(std::uint32_t set_mask) const {
    if (set_mask == 0) return 1.0;
    double best = 0.0;
    for (std::size_t mask = 0; mask < probs_.size(); ++mask)
      best = std::max(best, probs_[mask ^ set_mask] / probs_[mask]);
    return best;
  }

  double mean(const std::vector<double>& f_table) const {
    double s = 0.0;
    for (std::size_t mask = 0; mask < probs_.size(); ++mask) s += probs_[mask] * f_table[mask];
    return s;
  }

  double variance(const std::vector<double>& f_table) const {
    const double mu = mean(f_table);
    double s = 0.0;
    for (std::size_t mask = 0; mask < probs_.size(); ++mask) {
      const double d = f_table[mask] - mu;
      s += probs_[mask] * d * d;
    }
    return s;
  }

 private:
  ModelParams params_;
  std::shared_ptr<const Enumeration> enumeration_;
  Boundary bc_ = Boundary::free;
  std::vector<double> probs_;
};

/// Binary export: 8-byte little-endian unsigned count N, then N doubles.
inline void write_measure(const std::string& path, const std::vector<double>& probs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_measure: cannot open " + path);
  std::uint64_t n = probs.size();
  unsigned char hdr[8];
  for (int k = 0; k < 8; ++k) hdr[k] = static_cast<unsigned char>((n >> (8 * k)) & 0xff);
  out.write(reinterpret_cast<const char*>(hdr), 8);
  out.write(reinterpret_cast<const char*>(probs.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!out) throw std::runtime_error("write_measure: short write to " + path);
}

inline std::vector<double> read_measure(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_measure: cannot open " + path);
  unsigned char hdr[8];
  in.read(reinterpret_cast<char*>(hdr), 8);
  std::uint64_t n = 0;
  for (int k = 0; k < 8; ++k) n |= static_cast<std::uint64_t>(hdr[k]) << (8 * k);
  std::vector<double> probs(n);
  in.read(reinterpret_cast<char*>(probs.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw std::runtime_error("read_measure: truncated file " + path);
  return probs;
}

/// Self-avoiding-walk convergence threshold: beta < log(2d/(2d-1)) / (8d).
inline double threshold_koko(int d) {
  if (d < 1) throw std::invalid_argument("threshold_koko: d must be >= 1");
  return std::log((2.0 * d) / (2.0 * d - 1.0)) / (8.0 * d);
}

/// Dobrushin uniqueness for the ferromagnet: 2d tanh(beta) < 1.
inline bool dobrushin_ok(const ModelParams& params) {
  params.validate();
  if (params.J != 1)
    throw std::invalid_argument("dobrushin_ok: only stated for the ferromagnetic case J=+1");
  return 2.0 * params.dim * std::tanh(params.beta) < 1.0;
}

/// Sufficient condition for the square-root-tail series:
/// (2d-1) p^{1/2} e^{c'} < 1, i.e. (2d-1)^2 e^{-2 beta h}(e^{12 beta d} - e^{4 beta d}) < 1.
inline bool racine2_sufficient(const ModelParams& params) {
  params.validate();
  const double d = params.dim;
  const double lhs = (2.0 * d - 1.0) * (2.0 * d - 1.0) * std::exp(-2.0 * params.beta * params.h) *
                     (std::exp(12.0 * params.beta * d) - std::exp(4.0 * params.beta * d));
  return lhs < 1.0;
}

/// Inverse of p(beta, 0) = 2 sinh(4 beta d): the h=0 coupling strength whose
/// disagreement probability is exactly p.
inline double beta_for_p(double p, int d) {
  if (!(p >= 0.0)) throw std::invalid_argument("beta_for_p: p must be >= 0");
  if (d < 1) throw std::invalid_argument("beta_for_p: d must be >= 1");
  return std::asinh(p / 2.0) / (4.0 * d);
}

/// Standard numerical critical values for site percolation, used only to
/// label regimes in reports; no inequality depends on them.
inline double site_percolation_pc(int d) {
  switch (d) {
    case 1:
      return 1.0;
    case 2:
      return 0.592746;
    case 3:
      return 0.311608;
    default:
      return 1.0 / (2.0 * d - 1.0);  // mean-field lower bound
  }
}

}  // namespace mrf

#endif  // MRF_MODEL_HPP
