#ifndef MRF_PERCOLATION_HPP
#define MRF_PERCOLATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <set>
#include <stdexcept>
#include <vector>

#include "mrf/lattice.hpp"
#include "mrf/rng.hpp"

namespace mrf {

/// The open cluster of the origin under independent site percolation.
struct ClusterSample {
  std::vector<Site> sites;  // contains the origin
  bool truncated = false;   // growth hit the cap with open frontier left

  int size() const { return static_cast<int>(sites.size()); }
};

/// A Monte Carlo moment with an analytic remainder envelope.
struct MomentEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t n_samples = 0;
  std::uint64_t truncation_cap = 0;
  double tail_bound = 0.0;  // infinity when the remainder series diverges

  double upper_envelope(double n_sigma = 3.0) const {
    return value + n_sigma * std_error + tail_bound;
  }
};

namespace detail {

/// Per-site coin: open iff the site-keyed uniform is below p.  Keying the
/// uniform by (salt, coordinates) gives one fresh Bernoulli per probed site,
/// makes the grown cluster independent of probe order, and couples clusters
/// monotonically across p under a common salt.
inline bool site_open(std::uint64_t salt, const Site& s, double p) {
  std::uint64_t h = salt;
  for (int c : s.coords) h = hash_u64(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(c)));
  return (static_cast<double>(mix64(h) >> 11) * 0x1.0p-53) < p;
}

}  // namespace detail

/// Breadth-first growth of the origin cluster; the origin is open for sure.
/// `allowed`, when given, confines growth to that predicate (used for
/// finite-box comparisons).  The salt is drawn from the stream, so repeated
/// calls give independent clusters.
template <class Allowed>
ClusterSample sample_cluster_if(double p, int d, int cap, Stream& rng, Allowed allowed) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("sample_cluster: need 0 <= p < 1");
  if (cap < 1) throw std::invalid_argument("sample_cluster: cap must be >= 1");
  const std::uint64_t salt = rng.next_u64();
  const Site origin{std::vector<int>(d, 0)};
  ClusterSample out;
  std::set<Site> probed;  // sites whose coin has been spent (origin included)
  std::deque<Site> frontier;
  probed.insert(origin);
  out.sites.push_back(origin);
  frontier.push_back(origin);
  while (!frontier.empty()) {
    if (out.size() >= cap) {
      // Would any pending probe extend the cluster?
      for (const Site& open_site : frontier) {
        for (const Site& nb : neighbor_sites(open_site)) {
          if (probed.count(nb) || !allowed(nb)) continue;
          if (detail::site_open(salt, nb, p)) {
            out.truncated = true;
            break;
          }
        }
        if (out.truncated) break;
      }
      break;
    }
    const Site cur = frontier.front();
    frontier.pop_front();
    for (const Site& nb : neighbor_sites(cur)) {
      if (!allowed(nb) || !probed.insert(nb).second) continue;
      if (detail::site_open(salt, nb, p)) {
        out.sites.push_back(nb);
        frontier.push_back(nb);
        if (out.size() >= cap) break;
      }
    }
  }
  std::sort(out.sites.begin(), out.sites.end());
  return out;
}

inline ClusterSample sample_cluster(double p, int d, int cap, Stream& rng) {
  return sample_cluster_if(p, d, cap, rng, [](const Site&) { return true; });
}

/// Sampled cluster sizes with a shared cap; the backbone of the tail and
/// moment estimators (common random numbers across derived quantities).
struct ClusterSizes {
  std::vector<int> sizes;       // observed size, == cap for truncated growth
  std::vector<bool> truncated;  // true when the real cluster exceeds the cap
  int cap = 0;
};

inline ClusterSizes sample_cluster_sizes(double p, int d, int cap, std::uint64_t samples, Stream& rng,
                                         unsigned threads = 1) {
  const std::uint64_t base = rng.next_u64();
  struct Acc {
    std::vector<int> sizes;
    std::vector<bool> truncated;
  };
  Acc res = parallel_reduce<Acc>(
      samples, threads, Acc{},
      [&](Acc& a, std::size_t i) {
        Stream s(hash_u64(base, i));
        ClusterSample c = sample_cluster(p, d, cap, s);
        a.sizes.push_back(c.size());
        a.truncated.push_back(c.truncated);
      },
      [](Acc& a, const Acc& b) {
        a.sizes.insert(a.sizes.end(), b.sizes.begin(), b.sizes.end());
        a.truncated.insert(a.truncated.end(), b.truncated.begin(), b.truncated.end());
      });
  ClusterSizes out;
  out.sizes = std::move(res.sizes);
  out.truncated = std::move(res.truncated);
  out.cap = cap;
  return out;
}

/// Empirical P_p(|C| >= n) from shared sizes; exact values at n = 1 or p = 0.
inline MomentEstimate tail_from_sizes(const ClusterSizes& cs, int n) {
  if (n < 1) throw std::invalid_argument("tail_estimate: n must be >= 1");
  MomentEstimate e;
  e.n_samples = cs.sizes.size();
  e.truncation_cap = cs.cap;
  if (n == 1) {
    e.value = 1.0;
    return e;
  }
  if (n > cs.cap) throw std::invalid_argument("tail_from_sizes: n exceeds the sampling cap");
  std::uint64_t hits = 0;
  for (int s : cs.sizes)
    if (s >= n) ++hits;
  const double m = static_cast<double>(cs.sizes.size());
  e.value = static_cast<double>(hits) / m;
  e.std_error = std::sqrt(e.value * (1.0 - e.value) / m);
  return e;
}

inline MomentEstimate tail_estimate(double p, int d, int n, std::uint64_t samples, Stream& rng,
                                    unsigned threads = 1) {
  if (n < 1) throw std::invalid_argument("tail_estimate: n must be >= 1");
  if (n == 1 || p == 0.0) {
    MomentEstimate e;
    e.value = (n == 1) ? 1.0 : 0.0;
    e.n_samples = samples;
    e.truncation_cap = n;
    return e;
  }
  ClusterSizes cs = sample_cluster_sizes(p, d, n, samples, rng, threads);
  return tail_from_sizes(cs, n);
}

/// Closed form of the self-avoiding-walk series sum_n n (p (2d-1) e^c)^n =
/// x / (1-x)^2, or infinity when x >= 1.
inline double saw_series(double p, int d, double c) {
  const double x = p * (2.0 * d - 1.0) * std::exp(c);
  if (x >= 1.0) return std::numeric_limits<double>::infinity();
  return x / ((1.0 - x) * (1.0 - x));
}

namespace detail {

/// sum_{n >= from} n x^n = x^from (from - (from-1) x) / (1-x)^2 for 0 <= x < 1.
inline double series_n_xn_from(double x, int from) {
  if (x >= 1.0) return std::numeric_limits<double>::infinity();
  if (x <= 0.0) return 0.0;
  return std::pow(x, from) * (from - (from - 1) * x) / ((1.0 - x) * (1.0 - x));
}

}  // namespace detail

/// Monte Carlo estimate of K = E_p(|C| e^{c|C|}) as a truncated mean plus an
/// analytic SAW remainder; divergence of the remainder is a reported state.
inline MomentEstimate moment_K(double p, int d, double c, int cap, std::uint64_t samples, Stream& rng,
                               unsigned threads = 1) {
  if (cap < 1) throw std::invalid_argument("moment_K: cap must be >= 1");
  MomentEstimate e;
  e.truncation_cap = cap;
  const double x = p * (2.0 * d - 1.0) * std::exp(c);
  e.tail_bound = detail::series_n_xn_from(x, cap + 1);
  if (p == 0.0) {
    e.value = std::exp(c);
    e.n_samples = samples;
    return e;
  }
  const std::uint64_t base = rng.next_u64();
  Welford w = parallel_reduce<Welford>(
      samples, threads, Welford{},
      [&](Welford& acc, std::size_t i) {
        Stream s(hash_u64(base, i));
        ClusterSample cl = sample_cluster(p, d, cap, s);
        const double v =
            cl.truncated ? 0.0 : static_cast<double>(cl.size()) * std::exp(c * cl.size());
        acc.add(v);
      },
      [](Welford& a, const Welford& b) { a.merge(b); });
  e.value = w.mean();
  e.std_error = w.std_error();
  e.n_samples = w.count();
  return e;
}

/// K' = sum_n n (2d-1)^n e^{c' n} P_p(|C| >= n)^{1/2}: partial sum to the cap
/// from empirical tails, remainder from the p^{n/2} tail decay behind the
/// sufficient condition (2d-1) p^{1/2} e^{c'} < 1.
inline MomentEstimate kprime_estimate(double p, int d, double c_prime, int cap,
                                      std::uint64_t samples, Stream& rng, unsigned threads = 1) {
  if (cap < 1) throw std::invalid_argument("kprime_estimate: cap must be >= 1");
  MomentEstimate e;
  e.truncation_cap = cap;
  e.n_samples = samples;
  const double y = (2.0 * d - 1.0) * std::exp(c_prime) * std::sqrt(p);
  e.tail_bound = detail::series_n_xn_from(y, cap + 1);
  ClusterSizes cs =
      (p > 0.0) ? sample_cluster_sizes(p, d, cap, samples, rng, threads) : ClusterSizes{{}, {}, cap};
  double sum = 0.0, var = 0.0;
  for (int n = 1; n <= cap; ++n) {
    double tail, tail_se;
    if (n == 1) {
      tail = 1.0;
      tail_se = 0.0;
    } else if (p == 0.0) {
      break;  // all higher tails vanish
    } else {
      MomentEstimate t = tail_from_sizes(cs, n);
      tail = t.value;
      tail_se = t.std_error;
    }
    if (tail <= 0.0) break;  // empirical tails are nonincreasing
    const double weight = n * std::pow(2.0 * d - 1.0, n) * std::exp(c_prime * n);
    sum += weight * std::sqrt(tail);
    if (tail > 0.0) {
      const double dse = weight * tail_se / (2.0 * std::sqrt(tail));  // delta method
      var += dse * dse;
    }
  }
  e.value = sum;
  e.std_error = std::sqrt(var);
  return e;
}

/// Truncated moments K_N = sum_{n<=N} n e^{cn} P_p(|C| >= n) from one shared
/// sample set; nondecreasing in N by construction.
inline std::vector<std::pair<int, double>> k_n_curve(double p, int d, double c, int n_max,
                                                     std::uint64_t samples, Stream& rng,
                                                     unsigned threads = 1) {
  if (n_max < 1) throw std::invalid_argument("k_n_curve: N_max must be >= 1");
  ClusterSizes cs = (p > 0.0) ? sample_cluster_sizes(p, d, n_max, samples, rng, threads)
                              : ClusterSizes{{}, {}, n_max};
  std::vector<std::pair<int, double>> out;
  double acc = 0.0;
  for (int n = 1; n <= n_max; ++n) {
    double tail = 1.0;
    if (n > 1) tail = (p > 0.0) ? tail_from_sizes(cs, n).value : 0.0;
    acc += n * std::exp(c * n) * tail;
    out.emplace_back(n, acc);
  }
  return out;
}

/// E_p(|C|^2 1{|C| > N}) over a shared sample set for every N in `cut_list`
/// (common random numbers make the decay in N pathwise monotone).
inline std::vector<MomentEstimate> tail_second_moment_curve(double p, int d,
                                                            const std::vector<int>& cut_list,
                                                            std::uint64_t samples, Stream& rng,
                                                            int cap = 100000, unsigned threads = 1) {
  ClusterSizes cs = (p > 0.0) ? sample_cluster_sizes(p, d, cap, samples, rng, threads)
                              : ClusterSizes{{}, {}, cap};
  std::vector<MomentEstimate> out;
  out.reserve(cut_list.size());
  for (int cut : cut_list) {
    if (cut < 0) throw std::invalid_argument("tail_second_moment: N must be >= 0");
    MomentEstimate e;
    e.truncation_cap = cap;
    if (p == 0.0) {
      e.value = (cut == 0) ? 1.0 : 0.0;
      e.n_samples = samples;
      out.push_back(e);
      continue;
    }
    Welford w;
    for (int s : cs.sizes) w.add(s > cut ? static_cast<double>(s) * s : 0.0);
    e.value = w.mean();
    e.std_error = w.std_error();
    e.n_samples = w.count();
    out.push_back(e);
  }
  return out;
}

inline MomentEstimate tail_second_moment(double p, int d, int cut, std::uint64_t samples, Stream& rng,
                                         int cap = 100000, unsigned threads = 1) {
  return tail_second_moment_curve(p, d, {cut}, samples, rng, cap, threads).front();
}

}  // namespace mrf

#endif  // MRF_PERCOLATION_HPP
