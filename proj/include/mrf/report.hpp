#ifndef MRF_REPORT_HPP
#define MRF_REPORT_HPP

#include <cmath>
#include <string>
#include <vector>

namespace mrf {

/// One checked inequality lhs <= rhs + tol; margin = rhs - lhs.
struct Assertion {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  bool pass = false;
};

inline Assertion check_leq(std::string name, double lhs, double rhs, double tol = 0.0) {
  Assertion a;
  a.name = std::move(name);
  a.lhs = lhs;
  a.rhs = rhs;
  a.margin = rhs - lhs;
  a.pass = !(std::isnan(lhs) || std::isnan(rhs)) && lhs <= rhs + tol;
  return a;
}

inline Assertion check_close(std::string name, double lhs, double rhs, double tol) {
  Assertion a;
  a.name = std::move(name);
  a.lhs = lhs;
  a.rhs = rhs;
  a.margin = tol - std::abs(lhs - rhs);
  a.pass = !(std::isnan(lhs) || std::isnan(rhs)) && std::abs(lhs - rhs) <= tol;
  return a;
}

inline Assertion check_true(std::string name, bool cond) {
  Assertion a;
  a.name = std::move(name);
  a.lhs = cond ? 1.0 : 0.0;
  a.rhs = 1.0;
  a.margin = 0.0;
  a.pass = cond;
  return a;
}

inline bool all_pass(const std::vector<Assertion>& as) {
  for (const Assertion& a : as)
    if (!a.pass) return false;
  return true;
}

}  // namespace mrf

#endif  // MRF_REPORT_HPP
