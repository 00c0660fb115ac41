#ifndef MRF_COUPLING_HPP
#define MRF_COUPLING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "mrf/model.hpp"
#include "mrf/rng.hpp"

namespace mrf {

/// Optimal (maximal) coupling of two +/-1 laws given by their plus
/// probabilities: diagonal mass is maximal, disagreement mass |p1 - p2|.
struct BinaryCouplingTable {
  double pp = 0.0;  // (+,+)
  double pm = 0.0;  // (+,-)
  double mp = 0.0;  // (-,+)
  double mm = 0.0;  // (-,-)

  double disagreement() const { return pm + mp; }
};

inline BinaryCouplingTable optimal_binary_coupling(double p1, double p2) {
  if (!(p1 >= 0.0 && p1 <= 1.0 && p2 >= 0.0 && p2 <= 1.0))
    throw std::invalid_argument("optimal_binary_coupling: probabilities out of [0,1]");
  BinaryCouplingTable q;
  q.pp = std::min(p1, p2);
  q.mm = std::min(1.0 - p1, 1.0 - p2);
  if (p1 >= p2)
    q.pm = p1 - p2;
  else
    q.mp = p2 - p1;
  return q;
}

/// Largest total-variation distance between single-site conditional laws
/// whose neighbor sums differ by one spin flip; bounded by p(beta, h).
inline double max_single_flip_tv(const ModelParams& params) {
  double best = 0.0;
  for (int s = -2 * params.dim + 2; s <= 2 * params.dim; s += 2) {
    const double d = std::abs(conditional_plus_prob(params, s) - conditional_plus_prob(params, s - 2));
    best = std::max(best, d);
  }
  // Also hit pairs of odd parity (boundary sites with an odd neighbor count).
  for (int s = -2 * params.dim + 3; s <= 2 * params.dim - 1; s += 2) {
    const double d = std::abs(conditional_plus_prob(params, s) - conditional_plus_prob(params, s - 2));
    best = std::max(best, d);
  }
  return best;
}

enum class CouplingMode { exact, two_stage };

enum class ScanFallback { lowest_rank, highest_rank };

struct PairSample {
  int rank;
  int y;  // +/-1
  int z;  // +/-1
};

/// One run of the disagreement-percolation coupling.
struct CouplingTranscript {
  int pivot_rank = 0;
  std::uint32_t prefix_vals = 0;  // spins of ranks [1, pivot-1] in the low bits
  CouplingMode mode = CouplingMode::exact;
  std::vector<PairSample> pair;   // generation order
  std::vector<int> disagreement;  // ranks with y != z, pivot included
  std::vector<int> failure;       // failed-coin cluster (two-stage only), pivot included

  std::uint32_t disagreement_mask() const {
    std::uint32_t m = 0;
    for (int r : disagreement) m |= 1u << (r - 1);
    return m;
  }
};

namespace detail {

/// Deterministic scan order: among ungenerated ranks above the pivot, prefer
/// the lowest rank adjacent to the current disagreement (pivot included);
/// otherwise fall back to an ungenerated rank adjacent to the generated
/// region, which by the enumeration invariant is the extremal ungenerated
/// rank.
inline int next_scan_site(const Enumeration& e, int pivot, std::uint32_t gen_set,
                          std::uint32_t dis_set, ScanFallback fb = ScanFallback::lowest_rank) {
  const int n = e.size();
  int fallback = 0;
  for (int pos = 0; pos < n - pivot; ++pos) {
    const int r = (fb == ScanFallback::lowest_rank) ? pivot + 1 + pos : n - pos;
    if (mask_bit(gen_set, r)) continue;
    if (fallback == 0) fallback = r;
    for (int nb : e.neighbors(r)) {
      if (mask_bit(dis_set, nb)) return r;
    }
  }
  return fallback;  // 0 when everything is generated
}

inline bool adjacent_to(const Enumeration& e, int rank, std::uint32_t set) {
  for (int nb : e.neighbors(rank)) {
    if (mask_bit(set, nb)) return true;
  }
  return false;
}

}  // namespace detail

inline bool ranks_connected(const std::vector<int>& ranks, const Enumeration& e) {
  if (ranks.empty()) return true;
  std::uint32_t set = 0;
  for (int r : ranks) set |= 1u << (r - 1);
  std::uint32_t seen = 1u << (ranks.front() - 1);
  std::vector<int> stack{ranks.front()};
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    for (int nb : e.neighbors(cur)) {
      const std::uint32_t bit = 1u << (nb - 1);
      if ((set & bit) && !(seen & bit)) {
        seen |= bit;
        stack.push_back(nb);
      }
    }
  }
  return seen == set;
}

/// Exhaustive enumeration of the coupling tree for a fixed conditioning.
/// Invokes leaf(prob, dis_mask, y_mask, z_mask) for every realization;
/// y/z masks carry the prefix and pivot bits.  Branches below prune_eps
/// (floating-point echoes of mathematically equal conditionals) are dropped;
/// the discarded mass stays below depth * prune_eps.
template <class Leaf>
void enumerate_coupling_tree(const ExactMeasure& m, int pivot, std::uint32_t prefix_vals, Leaf&& leaf,
                             double prune_eps = 1e-14) {
  const Enumeration& e = m.enumeration();
  const int n = e.size();
  if (pivot < 1 || pivot > n) throw std::invalid_argument("coupling: pivot out of range");
  const std::uint32_t prefix_mask = (pivot > 1) ? ((1u << (pivot - 1)) - 1u) : 0u;
  const std::uint32_t pivot_bit = 1u << (pivot - 1);
  const std::uint32_t base = prefix_vals & prefix_mask;

  struct Frame {
    std::uint32_t gen_set, yvals, zvals, dis;
    double prob;
  };
  std::vector<Frame> stack;
  stack.push_back({0u, base | pivot_bit, base, pivot_bit, 1.0});
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    const int s = detail::next_scan_site(e, pivot, f.gen_set, f.dis);
    if (s == 0) {
      leaf(f.prob, f.dis, f.yvals, f.zvals);
      continue;
    }
    const std::uint32_t fixed = prefix_mask | pivot_bit | f.gen_set;
    const double p1 = m.marginal_plus(fixed, f.yvals, s);
    const double p2 = m.marginal_plus(fixed, f.zvals, s);
    const BinaryCouplingTable q = optimal_binary_coupling(p1, p2);
    const std::uint32_t bit = 1u << (s - 1);
    const auto push = [&](double cell, bool yp, bool zp) {
      if (cell <= prune_eps) return;
      Frame g = f;
      g.gen_set |= bit;
      if (yp) g.yvals |= bit;
      if (zp) g.zvals |= bit;
      if (yp != zp) g.dis |= bit;
      g.prob *= cell;
      stack.push_back(g);
    };
    push(q.pp, true, true);
    push(q.mm, false, false);
    push(q.pm, true, false);
    push(q.mp, false, true);
  }
}

/// One sampled run of the exact-mode coupling: every single-site pair is
/// drawn from the optimal coupling of the exact conditionals given the
/// generated past (unexplored sites marginalized).
inline CouplingTranscript grow_coupling_exact(const ExactMeasure& m, int pivot,
                                              std::uint32_t prefix_vals, Stream& rng) {
  const Enumeration& e = m.enumeration();
  const int n = e.size();
  if (pivot < 1 || pivot > n) throw std::invalid_argument("coupling: pivot out of range");
  const std::uint32_t prefix_mask = (pivot > 1) ? ((1u << (pivot - 1)) - 1u) : 0u;
  const std::uint32_t pivot_bit = 1u << (pivot - 1);
  const std::uint32_t base = prefix_vals & prefix_mask;

  CouplingTranscript t;
  t.pivot_rank = pivot;
  t.prefix_vals = base;
  t.mode = CouplingMode::exact;
  t.disagreement.push_back(pivot);

  std::uint32_t gen_set = 0, yvals = base | pivot_bit, zvals = base, dis = pivot_bit;
  for (;;) {
    const int s = detail::next_scan_site(e, pivot, gen_set, dis);
    if (s == 0) break;
    const std::uint32_t fixed = prefix_mask | pivot_bit | gen_set;
    const double p1 = m.marginal_plus(fixed, yvals, s);
    const double p2 = m.marginal_plus(fixed, zvals, s);
    const BinaryCouplingTable q = optimal_binary_coupling(p1, p2);
    const double u = rng.uniform();
    bool yp, zp;
    if (u < q.pp) {
      yp = zp = true;
    } else if (u < q.pp + q.mm) {
      yp = zp = false;
    } else if (u < q.pp + q.mm + q.pm) {
      yp = true;
      zp = false;
    } else {
      yp = false;
      zp = true;
    }
    const std::uint32_t bit = 1u << (s - 1);
    gen_set |= bit;
    if (yp) yvals |= bit;
    if (zp) zvals |= bit;
    if (yp != zp) {
      dis |= bit;
      t.disagreement.push_back(s);
    }
    t.pair.push_back({s, yp ? +1 : -1, zp ? +1 : -1});
  }
  std::sort(t.disagreement.begin(), t.disagreement.end());
  return t;
}

/// Draws a full configuration consistent with the clamped spins; used by the
/// two-stage coupling to realize Y and to refill Z on the failure cluster.
using ConfigSampler = std::function<std::uint32_t(std::uint32_t clamp_set, std::uint32_t clamp_vals,
                                                  Stream& rng)>;

/// Exact sequential sampler backed by the brute-force measure.
inline ConfigSampler exact_config_sampler(const ExactMeasure& m) {
  return [&m](std::uint32_t clamp_set, std::uint32_t clamp_vals, Stream& rng) {
    const int n = m.sites();
    std::uint32_t set = clamp_set;
    std::uint32_t vals = clamp_vals & clamp_set;
    for (int r = 1; r <= n; ++r) {
      const std::uint32_t bit = 1u << (r - 1);
      if (set & bit) continue;
      const double pp = m.marginal_plus(set, vals, r);
      if (rng.bernoulli(pp)) vals |= bit;
      set |= bit;
    }
    return vals;
  };
}

/// Two-stage realization: Y is drawn from the plus-conditioned law, an
/// independent coin per probed site (success probability 1-p) grows the
/// failure cluster from the pivot, and Z copies Y off that cluster.  The
/// failure cluster is independent of Y by construction and contains the
/// disagreement cluster.
inline CouplingTranscript grow_coupling_two_stage(const Enumeration& e, const ConfigSampler& sampler,
                                                  int pivot, std::uint32_t prefix_vals, double p,
                                                  Stream& rng) {
  const int n = e.size();
  if (pivot < 1 || pivot > n) throw std::invalid_argument("coupling: pivot out of range");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("coupling: p out of [0,1]");
  const std::uint32_t prefix_mask = (pivot > 1) ? ((1u << (pivot - 1)) - 1u) : 0u;
  const std::uint32_t pivot_bit = 1u << (pivot - 1);
  const std::uint32_t base = prefix_vals & prefix_mask;

  CouplingTranscript t;
  t.pivot_rank = pivot;
  t.prefix_vals = base;
  t.mode = CouplingMode::two_stage;

  // Stage 1: Y from the plus-conditioned law.
  const std::uint32_t yvals = sampler(prefix_mask | pivot_bit, base | pivot_bit, rng);

  // Failure-cluster growth: probe the lowest unprobed rank above the pivot
  // adjacent to the cluster; a failed coin joins it.  Coins never look at Y.
  std::uint32_t cluster = pivot_bit, probed = 0;
  t.failure.push_back(pivot);
  for (;;) {
    int next = 0;
    for (int r = pivot + 1; r <= n; ++r) {
      const std::uint32_t bit = 1u << (r - 1);
      if ((probed & bit) || (cluster & bit)) continue;
      if (detail::adjacent_to(e, r, cluster)) {
        next = r;
        break;
      }
    }
    if (next == 0) break;
    const std::uint32_t bit = 1u << (next - 1);
    probed |= bit;
    if (rng.bernoulli(p)) {  // failure: no certain agreement
      cluster |= bit;
      t.failure.push_back(next);
    }
  }

  // Stage 2: Z copies Y off the cluster; on the cluster it is refilled from
  // the minus-conditioned law given everything already settled.
  const std::uint32_t off_cluster = ~cluster & ~prefix_mask & static_cast<std::uint32_t>((std::uint64_t{1} << n) - 1);
  const std::uint32_t clamp_set = prefix_mask | pivot_bit | (off_cluster & ~pivot_bit);
  const std::uint32_t clamp_vals = base | (yvals & off_cluster & ~pivot_bit);
  const std::uint32_t zvals = sampler(clamp_set, clamp_vals, rng) & ~pivot_bit;

  for (int r = pivot + 1; r <= n; ++r) {
    const std::uint32_t bit = 1u << (r - 1);
    const int y = (yvals & bit) ? +1 : -1;
    const int z = (zvals & bit) ? +1 : -1;
    t.pair.push_back({r, y, z});
    if (y != z) t.disagreement.push_back(r);
  }
  t.disagreement.insert(t.disagreement.begin(), pivot);
  std::sort(t.disagreement.begin(), t.disagreement.end());
  std::sort(t.failure.begin(), t.failure.end());
  return t;
}

struct DominationAudit {
  double lhs = 0.0;     // sup over prefixes of P(C_i contains A)
  double rhs = 0.0;     // P_p(percolation cluster of the origin contains A)
  double margin = 0.0;  // rhs - lhs, nonnegative when domination holds
};

/// Exact containment probability P_p(cluster of the origin contains A) for a
/// connected A holding the origin, by enumerating the growth tree restricted
/// to A: every coin pattern on A \ {origin} whose open set connects and
/// covers A contributes its pattern probability.
inline double cluster_containment_prob(double p, const std::vector<Site>& a) {
  const int k = static_cast<int>(a.size());
  if (k == 0) return 1.0;
  const int origin_idx = [&] {
    for (int i = 0; i < k; ++i)
      if (l1_norm(a[i]) == 0) return i;
    throw std::invalid_argument("cluster_containment_prob: A must contain the origin");
  }();
  std::vector<std::vector<int>> adj(k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (i != j && are_neighbors(a[i], a[j])) adj[i].push_back(j);
  double total = 0.0;
  const int others = k - 1;
  for (std::uint32_t pattern = 0; pattern < (1u << others); ++pattern) {
    // Open set: origin plus the pattern bits mapped over the non-origin sites.
    std::vector<bool> open(k, false);
    open[origin_idx] = true;
    int bitpos = 0;
    double prob = 1.0;
    for (int i = 0; i < k; ++i) {
      if (i == origin_idx) continue;
      const bool is_open = (pattern >> bitpos) & 1u;
      open[i] = is_open;
      prob *= is_open ? p : (1.0 - p);
      ++bitpos;
    }
    // Containment needs the open sub-cluster of the origin to cover A.
    std::vector<bool> seen(k, false);
    std::vector<int> stack{origin_idx};
    seen[origin_idx] = true;
    int covered = 1;
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      for (int nb : adj[cur]) {
        if (open[nb] && !seen[nb]) {
          seen[nb] = true;
          ++covered;
          stack.push_back(nb);
        }
      }
    }
    if (covered == k) total += prob;
  }
  return total;
}

/// Audits the domination inequality for one pivot and target set A (given as
/// ranks, pivot included): the sup over all conditioning prefixes of the
/// exact coupling-tree probability of {C_i contains A} against the exact
/// percolation containment probability at p(beta, h).
inline DominationAudit domination_audit(const ExactMeasure& m, int pivot, const std::vector<int>& a) {
  const Enumeration& e = m.enumeration();
  if (std::find(a.begin(), a.end(), pivot) == a.end())
    throw std::invalid_argument("domination_audit: A must contain the pivot");
  if (!ranks_connected(a, e)) throw std::invalid_argument("domination_audit: A must be connected");
  std::uint32_t a_mask = 0;
  for (int r : a) a_mask |= 1u << (r - 1);

  DominationAudit out;
  const std::uint32_t n_prefixes = 1u << (pivot - 1);
  for (std::uint32_t prefix = 0; prefix < n_prefixes; ++prefix) {
    double hit = 0.0;
    enumerate_coupling_tree(m, pivot, prefix,
                            [&](double prob, std::uint32_t dis, std::uint32_t, std::uint32_t) {
                              if ((dis & a_mask) == a_mask) hit += prob;
                            });
    out.lhs = std::max(out.lhs, hit);
  }

  // Translate A so the pivot sits at the origin.
  std::vector<Site> sites;
  const Site& pivot_site = e.site(pivot);
  for (int r : a) {
    Site s = e.site(r);
    for (std::size_t k = 0; k < s.coords.size(); ++k) s.coords[k] -= pivot_site.coords[k];
    sites.push_back(std::move(s));
  }
  out.rhs = cluster_containment_prob(m.params().p_disagree(), sites);
  out.margin = out.rhs - out.lhs;
  return out;
}

/// Change-of-measure lemma audit: the max over configurations of
/// P(composite Z_{A_<x} Y_rest = .) / P(Y = .), both laws taken over the
/// ranks above the pivot under the coupling with the given prefix; bounded
/// by exp(c' |A|).
inline double lemma_rn_audit(const ExactMeasure& m, int pivot, std::uint32_t prefix_vals,
                             const std::vector<int>& a, int x) {
  if (std::find(a.begin(), a.end(), pivot) == a.end())
    throw std::invalid_argument("lemma_rn_audit: A must contain the pivot");
  if (std::find(a.begin(), a.end(), x) == a.end())
    throw std::invalid_argument("lemma_rn_audit: x must belong to A");
  std::vector<int> sorted(a);
  std::sort(sorted.begin(), sorted.end());
  std::uint32_t alt_mask = 0;  // A_{<x} in enumeration order, ranks above the pivot
  for (int r : sorted) {
    if (r == x) break;
    if (r > pivot) alt_mask |= 1u << (r - 1);
  }
  const int n = m.sites();
  const std::size_t nrest = std::size_t{1} << (n - pivot);
  std::vector<double> composite(nrest, 0.0), ylaw(nrest, 0.0);
  enumerate_coupling_tree(m, pivot, prefix_vals,
                          [&](double prob, std::uint32_t, std::uint32_t y, std::uint32_t z) {
                            const std::uint32_t comp = (z & alt_mask) | (y & ~alt_mask);
                            composite[comp >> pivot] += prob;
                            ylaw[y >> pivot] += prob;
                          });
  double best = 0.0;
  for (std::size_t i = 0; i < nrest; ++i) {
    if (composite[i] == 0.0) continue;
    if (ylaw[i] <= 0.0) throw std::runtime_error("lemma_rn_audit: zero-mass configuration under Pr_2");
    best = std::max(best, composite[i] / ylaw[i]);
  }
  return best;
}

}  // namespace mrf

#endif  // MRF_COUPLING_HPP
