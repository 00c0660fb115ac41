#ifndef MRF_LATTICE_HPP
#define MRF_LATTICE_HPP

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

namespace mrf {

/// A lattice site of Z^d, coordinates in lattice units.
struct Site {
  std::vector<int> coords;

  auto operator<=>(const Site&) const = default;
};

inline int l1_norm(const Site& s) {
  int n = 0;
  for (int c : s.coords) n += std::abs(c);
  return n;
}

inline bool are_neighbors(const Site& a, const Site& b) {
  if (a.coords.size() != b.coords.size()) return false;
  int dist = 0;
  for (std::size_t k = 0; k < a.coords.size(); ++k) {
    dist += std::abs(a.coords[k] - b.coords[k]);
    if (dist > 1) return false;
  }
  return dist == 1;
}

/// The 2d nearest neighbors of a site.
inline std::vector<Site> neighbor_sites(const Site& s) {
  std::vector<Site> out;
  out.reserve(2 * s.coords.size());
  for (std::size_t k = 0; k < s.coords.size(); ++k) {
    for (int step : {-1, +1}) {
      Site n = s;
      n.coords[k] += step;
      out.push_back(std::move(n));
    }
  }
  return out;
}

/// An ordered finite sublattice of Z^d.
///
/// The order is the shell enumeration: sites sorted by l1-norm, ties broken
/// lexicographically on coordinates.  Every site of shell n is adjacent to a
/// site of shell n-1, so each x_{i+1} lies in the exterior boundary of
/// {x_1..x_i}: the order is a valid "spiraling" enumeration at every
/// truncation.  Ranks are 1-based throughout.
class Enumeration {
 public:
  static Enumeration box(int dim, int n_sites) {
    if (dim < 1) throw std::invalid_argument("Enumeration::box: dim must be >= 1");
    if (n_sites < 1) throw std::invalid_argument("Enumeration::box: n_sites must be >= 1");
    Enumeration e;
    e.dim_ = dim;
    int shell = 0;
    while (static_cast<int>(e.sites_.size()) < n_sites) {
      std::vector<Site> layer;
      Site scratch{std::vector<int>(dim, 0)};
      emit_shell(dim, 0, shell, scratch, layer);
      std::sort(layer.begin(), layer.end());
      for (auto& s : layer) {
        if (static_cast<int>(e.sites_.size()) == n_sites) break;
        e.sites_.push_back(std::move(s));
      }
      ++shell;
    }
    for (int r = 1; r <= n_sites; ++r) e.index_[e.sites_[r - 1]] = r;
    e.neighbor_table_.resize(n_sites + 1);
    for (int r = 1; r <= n_sites; ++r) {
      for (const Site& n : neighbor_sites(e.sites_[r - 1])) {
        if (auto it = e.index_.find(n); it != e.index_.end()) {
          e.neighbor_table_[r].push_back(it->second);
        }
      }
      std::sort(e.neighbor_table_[r].begin(), e.neighbor_table_[r].end());
    }
    return e;
  }

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(sites_.size()); }

  const Site& site(int rank) const { return sites_.at(rank - 1); }

  /// 1-based rank, or nullopt if the site is outside the box.
  std::optional<int> rank_of(const Site& s) const {
    auto it = index_.find(s);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Ranks of in-box nearest neighbors, ascending.
  const std::vector<int>& neighbors(int rank) const { return neighbor_table_.at(rank); }

  /// Number of nearest neighbors present in the box.
  int degree(int rank) const { return static_cast<int>(neighbors(rank).size()); }

  const std::vector<Site>& sites() const { return sites_; }

 private:
  // All coordinate vectors with l1-norm exactly `budget` in the remaining
  // dimensions, appended to `out`.
  static void emit_shell(int dim, int axis, int budget, Site& scratch, std::vector<Site>& out) {
    if (axis == dim - 1) {
      if (budget == 0) {
        scratch.coords[axis] = 0;
        out.push_back(scratch);
      } else {
        scratch.coords[axis] = -budget;
        out.push_back(scratch);
        scratch.coords[axis] = budget;
        out.push_back(scratch);
      }
      return;
    }
    for (int c = -budget; c <= budget; ++c) {
      scratch.coords[axis] = c;
      emit_shell(dim, axis + 1, budget - std::abs(c), scratch, out);
    }
  }

  int dim_ = 0;
  std::vector<Site> sites_;
  std::map<Site, int> index_;
  std::vector<std::vector<int>> neighbor_table_;
};

/// A_{<x}: the elements of the ordered set A strictly preceding x.
inline std::vector<Site> prefix_before(const std::vector<Site>& a, const Site& x) {
  auto it = std::find(a.begin(), a.end(), x);
  if (it == a.end()) throw std::invalid_argument("prefix_before: x is not an element of A");
  return std::vector<Site>(a.begin(), it);
}

/// Sites of the box adjacent to S but not in S.
inline std::vector<Site> exterior_boundary(const std::vector<Site>& s, const Enumeration& e) {
  std::vector<bool> in_s(e.size() + 1, false);
  for (const Site& x : s) {
    auto r = e.rank_of(x);
    if (!r) throw std::invalid_argument("exterior_boundary: S must be a subset of the box");
    in_s[*r] = true;
  }
  std::vector<bool> hit(e.size() + 1, false);
  std::vector<Site> out;
  for (int r = 1; r <= e.size(); ++r) {
    if (!in_s[r]) continue;
    for (int n : e.neighbors(r)) {
      if (!in_s[n] && !hit[n]) {
        hit[n] = true;
        out.push_back(e.site(n));
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Rank-set helpers for the bitmask representation used by the exact
/// machinery: bit k of a mask holds the spin of rank k+1, set bit = +1.
inline bool mask_bit(std::uint32_t mask, int rank) { return (mask >> (rank - 1)) & 1u; }

inline int spin_of(std::uint32_t mask, int rank) { return mask_bit(mask, rank) ? +1 : -1; }

}  // namespace mrf

#endif  // MRF_LATTICE_HPP
