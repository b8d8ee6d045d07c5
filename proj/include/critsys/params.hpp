#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "critsys/errors.hpp"

namespace critsys {

// Positive power of a positive argument, via exp/log.
inline double pow_pos(double x, double a) {
  if (x > 0.0) return std::exp(a * std::log(x));
  if (x == 0.0) {
    if (a > 0.0) return 0.0;
    if (a == 0.0) return 1.0;
    return HUGE_VAL;
  }
  throw DomainError("pow_pos: negative base " + std::to_string(x));
}

// |x|^a for a > 0, sign ignored.
inline double pow_abs(double x, double a) { return x == 0.0 ? 0.0 : std::exp(a * std::log(std::abs(x))); }

// Physical parameters of the coupled critical system
//   -Lu + l1 u = m1 u^{2p-1} + b u^{p-1} v^p,  -Lv + l2 v = m2 v^{2p-1} + b v^{p-1} u^p,
// with 2p the critical Sobolev exponent 2N/(N-2).
struct SystemParams {
  int N = 5;
  double mu1 = 1.0;
  double mu2 = 1.0;
  double beta = 1.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;

  double p() const { return static_cast<double>(N) / (N - 2); }
  // 2^* = 2N/(N-2)
  double critical_exponent() const { return 2.0 * p(); }
  // 1/(p-1) = (N-2)/2
  double inv_pm1() const { return 0.5 * (N - 2); }
  double mu_max() const { return std::max(mu1, mu2); }
  // (p-1) max(mu1, mu2): lower edge of the uniqueness region
  double beta_uniqueness_floor() const { return (p() - 1.0) * mu_max(); }

  // Throws DomainError when N < 5 or a mu is not positive.
  void validate() const {
    if (N < 5) throw DomainError("N >= 5 is required (critical exponent 2N/(N-2) with N >= 5), got N = " + std::to_string(N));
    if (!(mu1 > 0.0) || !(mu2 > 0.0)) throw DomainError("mu1 and mu2 must be positive");
    if (!std::isfinite(beta) || !std::isfinite(lambda1) || !std::isfinite(lambda2))
      throw DomainError("non-finite parameter");
  }

  SystemParams swapped() const {
    SystemParams s = *this;
    std::swap(s.mu1, s.mu2);
    std::swap(s.lambda1, s.lambda2);
    return s;
  }
};

}  // namespace critsys
