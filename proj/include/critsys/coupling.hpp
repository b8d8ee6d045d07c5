#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "critsys/errors.hpp"
#include "critsys/params.hpp"
#include "critsys/roots.hpp"

namespace critsys {

// A positive solution (k, l) of alpha1 = alpha2 = 0.
struct CouplingSolution {
  double k = 0.0;
  double l = 0.0;
  bool is_minimal_k = false;
  double residual = 0.0;  // max |alpha_i| at (k, l)
  bool clamped = false;   // an argument was pulled onto a domain endpoint
};

struct AlphaValues {
  double a1;
  double a2;
};

enum class Curve { h1, h2 };

struct RootScanOptions {
  int points = 10000;
  double decades = 30.0;  // scan starts at kmax * 10^-decades
};

namespace detail {

inline constexpr double kEndpointClamp = 1e-14;

inline double kmax(const SystemParams& P, double mu) { return pow_pos(mu, -P.inv_pm1()); }

// Pull x onto (0, hi] when it overshoots hi by rounding only.
inline double clamp_upper(double x, double hi, bool& clamped, const char* what) {
  if (x > hi) {
    if (x - hi <= kEndpointClamp * hi) {
      clamped = true;
      return hi;
    }
    throw DomainError(std::string(what) + ": argument exceeds mu^{-1/(p-1)}");
  }
  return x;
}

inline double max_abs_alpha(AlphaValues a) { return std::max(std::abs(a.a1), std::abs(a.a2)); }

}  // namespace detail

// alpha1 = mu1 k^{p-1} + beta k^{p/2-1} l^{p/2} - 1
inline double alpha1(const SystemParams& P, double k, double l) {
  if (!(k > 0.0)) throw DomainError("alpha1: k must be positive");
  if (l < 0.0) throw DomainError("alpha1: l must be non-negative");
  const double p = P.p();
  return P.mu1 * pow_pos(k, p - 1.0) + P.beta * pow_pos(k, 0.5 * p - 1.0) * pow_pos(l, 0.5 * p) - 1.0;
}

inline double alpha2(const SystemParams& P, double k, double l) { return alpha1(P.swapped(), l, k); }

// Both components. A zero argument makes the other component's coupling term
// blow up; that component is then returned as +-infinity (sign of beta).
inline AlphaValues alpha(const SystemParams& P, double k, double l) {
  if (k < 0.0 || l < 0.0 || (k == 0.0 && l == 0.0)) throw DomainError("alpha: need k, l >= 0, not both zero");
  const double inf = std::numeric_limits<double>::infinity();
  const double edge = P.beta > 0.0 ? inf : (P.beta < 0.0 ? -inf : 0.0);
  AlphaValues a{};
  a.a1 = k > 0.0 ? alpha1(P, k, l) : edge;
  a.a2 = l > 0.0 ? alpha2(P, k, l) : edge;
  if (k == 0.0 && P.beta == 0.0) a.a1 = -1.0;
  if (l == 0.0 && P.beta == 0.0) a.a2 = -1.0;
  return a;
}

// h1(k) = beta^{-2/p} (k^{1-p/2} - mu1 k^{p/2})^{2/p}, so that alpha1(k, h1(k)) = 0; h2 symmetric.
inline double h_curve(const SystemParams& P, double x, Curve which, bool* clamped = nullptr) {
  if (!(P.beta > 0.0)) throw DomainError("h_curve: beta > 0 required");
  if (!(x > 0.0)) throw DomainError("h_curve: argument must be positive");
  const double mu = which == Curve::h1 ? P.mu1 : P.mu2;
  bool c = false;
  x = detail::clamp_upper(x, detail::kmax(P, mu), c, "h_curve");
  if (clamped) *clamped = c;
  const double p = P.p();
  // k^{1-p/2} - mu k^{p/2} = k^{1-p/2}(1 - mu k^{p-1})
  const double bracket = 1.0 - mu * pow_pos(x, p - 1.0);
  if (bracket <= 0.0) return 0.0;
  return pow_pos(P.beta, -2.0 / p) * pow_pos(pow_pos(x, 1.0 - 0.5 * p) * bracket, 2.0 / p);
}

// f(k) = ((1 - mu1 k^{p-1})/(beta k^{p-1}))^{(2-p)/p} - mu2/beta - ((beta^2 - mu1 mu2)/beta) k^{p-1}
inline double reduced_f(const SystemParams& P, double k) {
  if (!(P.beta > 0.0)) throw DomainError("reduced_f: beta > 0 required");
  if (!(k > 0.0)) throw DomainError("reduced_f: k must be positive");
  bool c = false;
  k = detail::clamp_upper(k, detail::kmax(P, P.mu1), c, "reduced_f");
  const double p = P.p();
  const double x = pow_pos(k, p - 1.0);
  const double base = std::max(0.0, (1.0 - P.mu1 * x) / (P.beta * x));
  return pow_pos(base, (2.0 - p) / p) - P.mu2 / P.beta - (P.beta * P.beta - P.mu1 * P.mu2) / P.beta * x;
}

namespace detail {

inline std::pair<double, double> reduced_f_and_derivative(const SystemParams& P, double k) {
  const double p = P.p();
  const double x = pow_pos(k, p - 1.0);
  const double a = (2.0 - p) / p;
  const double base = (1.0 - P.mu1 * x) / (P.beta * x);
  const double c = (P.beta * P.beta - P.mu1 * P.mu2) / P.beta;
  if (base <= 0.0) return {-P.mu2 / P.beta - c * x, -std::numeric_limits<double>::infinity()};
  const double f = pow_pos(base, a) - P.mu2 / P.beta - c * x;
  const double dbase_dx = -1.0 / (P.beta * x * x);
  const double df_dx = a * pow_pos(base, a - 1.0) * dbase_dx - c;
  return {f, df_dx * (p - 1.0) * pow_pos(k, p - 2.0)};
}

// d(alpha1, alpha2)/d(k, l), row-major.
inline std::array<std::array<double, 2>, 2> alpha_partials(const SystemParams& P, double k, double l) {
  const double p = P.p(), b = P.beta;
  const double cross = 0.5 * p * b * pow_pos(k, 0.5 * p - 1.0) * pow_pos(l, 0.5 * p - 1.0);
  return {{{(p - 1.0) * P.mu1 * pow_pos(k, p - 2.0) + (0.5 * p - 1.0) * b * pow_pos(k, 0.5 * p - 2.0) * pow_pos(l, 0.5 * p), cross},
           {cross, (p - 1.0) * P.mu2 * pow_pos(l, p - 2.0) + (0.5 * p - 1.0) * b * pow_pos(l, 0.5 * p - 2.0) * pow_pos(k, 0.5 * p)}}};
}

// l = h1(k) loses digits to cancellation when l is tiny, so a few Newton steps on
// the full system follow; a step is kept only if it lowers max |alpha|.
inline CouplingSolution finish_root(const SystemParams& P, double k, bool minimal) {
  CouplingSolution s;
  s.k = k;
  s.l = h_curve(P, k, Curve::h1, &s.clamped);
  s.is_minimal_k = minimal;
  if (!(s.k > 0.0 && s.l > 0.0)) {
    s.residual = std::numeric_limits<double>::infinity();
    return s;
  }
  s.residual = max_abs_alpha(alpha(P, s.k, s.l));
  for (int it = 0; it < 6 && s.residual > 0.0; ++it) {
    const auto a = alpha(P, s.k, s.l);
    const auto J = alpha_partials(P, s.k, s.l);
    const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    if (det == 0.0 || !std::isfinite(det)) break;
    const double k1 = s.k - (J[1][1] * a.a1 - J[0][1] * a.a2) / det;
    const double l1 = s.l - (-J[1][0] * a.a1 + J[0][0] * a.a2) / det;
    if (!(k1 > 0.0 && l1 > 0.0)) break;
    const double r1 = max_abs_alpha(alpha(P, k1, l1));
    if (!(r1 < s.residual)) break;
    s.k = k1;
    s.l = l1;
    s.residual = r1;
  }
  return s;
}

// Every sign change of f on the logarithmic scan grid, each refined to a root.
inline std::vector<double> scan_roots(const SystemParams& P, const RootScanOptions& opt, bool first_only) {
  const double hi = kmax(P, P.mu1);
  const int n = std::max(16, opt.points);
  const double log_lo = std::log(hi) - opt.decades * std::log(10.0);
  const double log_hi = std::log(hi);
  auto node = [&](int i) { return i == n ? hi : std::exp(log_lo + (log_hi - log_lo) * i / n); };
  std::vector<double> out;
  double k_prev = node(0);
  double f_prev = reduced_f(P, k_prev);
  for (int i = 1; i <= n; ++i) {
    const double k = node(i);
    const double f = reduced_f(P, k);
    if (f == 0.0) {
      out.push_back(k);
    } else if (f_prev != 0.0 && ((f > 0.0) != (f_prev > 0.0))) {
      auto fdf = [&](double x) { return reduced_f_and_derivative(P, x); };
      out.push_back(roots::hybrid_newton(fdf, {k_prev, k}, 4e-16));
    }
    if (first_only && !out.empty()) break;
    k_prev = k;
    f_prev = f;
  }
  return out;
}

}  // namespace detail

// (k0, l0) with k0 the smallest positive root of f and l0 = h1(k0).
inline CouplingSolution solve_k0_l0(const SystemParams& P, const RootScanOptions& opt = {}) {
  P.validate();
  if (!(P.beta > 0.0)) throw DomainError("solve_k0_l0: beta > 0 required");
  const auto r = detail::scan_roots(P, opt, true);
  if (r.empty())
    throw BracketError("solve_k0_l0: no sign change of f on a " + std::to_string(opt.points) + "-point scan",
                       opt.points);
  return detail::finish_root(P, r.front(), true);
}

// All roots visible at the scan resolution, ordered by k.
inline std::vector<CouplingSolution> all_coupling_roots(const SystemParams& P, const RootScanOptions& opt = {}) {
  P.validate();
  if (!(P.beta > 0.0)) throw DomainError("all_coupling_roots: beta > 0 required");
  std::vector<CouplingSolution> out;
  bool first = true;
  for (double k : detail::scan_roots(P, opt, false)) {
    out.push_back(detail::finish_root(P, k, first));
    first = false;
  }
  return out;
}

struct UniquenessReport {
  bool passed = true;
  std::size_t samples = 0;
  std::vector<std::array<double, 2>> violations;  // offending (k, l)
  double mu_sum_max = 0.0;                        // max_i mu_i (k0+l0)^{p-1}
  bool sum_bound_ok = true;
};

// Samples {k + l <= k0 + l0, k, l >= 0} and looks for points other than (k0, l0)
// where both alpha1 >= 0 and alpha2 >= 0.
inline UniquenessReport check_region_uniqueness(const SystemParams& P, const CouplingSolution& sol, int samples) {
  P.validate();
  if (P.beta < P.beta_uniqueness_floor()) throw DomainError("check_region_uniqueness: beta >= (p-1) max(mu) required");
  UniquenessReport rep;
  const double s0 = sol.k + sol.l;
  const double p = P.p();
  rep.mu_sum_max = P.mu_max() * pow_pos(s0, p - 1.0);
  rep.sum_bound_ok = rep.mu_sum_max < 1.0;
  const double band = 1e-6 * s0;
  const int n = std::max(2, static_cast<int>(std::ceil(std::sqrt(2.0 * std::max(1, samples)))));
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; i + j <= n; ++j) {
      if (i == 0 && j == 0) continue;
      const double k = s0 * i / n;
      const double l = s0 * j / n;
      ++rep.samples;
      if (std::hypot(k - sol.k, l - sol.l) < band) continue;
      const auto a = alpha(P, k, l);
      if (a.a1 >= 0.0 && a.a2 >= 0.0) rep.violations.push_back({k, l});
    }
  }
  rep.passed = rep.violations.empty() && rep.sum_bound_ok;
  return rep;
}

// g(beta) = (p-1) mu1 mu2 beta^{2/p-2} + beta^{2/p}
inline double g_of_beta(const SystemParams& P, double beta) {
  P.validate();
  if (beta < P.beta_uniqueness_floor()) throw DomainError("g_of_beta: beta >= (p-1) max(mu) required");
  const double p = P.p();
  return (p - 1.0) * P.mu1 * P.mu2 * pow_pos(beta, 2.0 / p - 2.0) + pow_pos(beta, 2.0 / p);
}

// p (p-1)^{2/p-1} max(mu_i^{2/p})
inline double beta0_target(const SystemParams& P) {
  const double p = P.p();
  return p * pow_pos(p - 1.0, 2.0 / p - 1.0) * pow_pos(P.mu_max(), 2.0 / p);
}

inline double solve_beta0(const SystemParams& P) {
  P.validate();
  const double lo = P.beta_uniqueness_floor();
  if (P.mu1 == P.mu2) return lo;
  const double target = beta0_target(P);
  auto F = [&](double b) { return g_of_beta(P, b) - target; };
  double hi = lo + 10.0 * P.mu_max();
  while (F(hi) < 0.0) hi = lo + 2.0 * (hi - lo);
  if (F(lo) >= 0.0) return lo;
  return roots::bisect(F, {lo, hi}, 0.0, 0.0, 4000);
}

struct JacobianResult {
  std::array<std::array<double, 2>, 2> J{};
  double det = 0.0;
  double det_closed_form = 0.0;
};

// Analytic d(alpha1, alpha2)/d(k, l) at a positive point.
inline JacobianResult jacobian_at(const SystemParams& P, double k, double l) {
  if (!(k > 0.0) || !(l > 0.0)) throw DomainError("jacobian_at: k, l must be positive");
  const double p = P.p();
  JacobianResult r;
  r.J = detail::alpha_partials(P, k, l);
  r.det = r.J[0][0] * r.J[1][1] - r.J[0][1] * r.J[1][0];
  r.det_closed_form = 0.5 * p * (p - 1.0) / (k * l) *
                      (P.mu1 * pow_pos(k, p - 1.0) + P.mu2 * pow_pos(l, p - 1.0) - 2.0 / p);
  return r;
}

inline JacobianResult jacobian_at(const SystemParams& P, const CouplingSolution& s) { return jacobian_at(P, s.k, s.l); }

struct BranchPoint {
  double beta = 0.0;
  CouplingSolution sol;
  // k + l > min_i mu_i^{-(N-2)/2}: the proportional branch is not least energy there
  bool above_min_threshold = false;
};

// Natural-parameter continuation of alpha = 0 in beta from the decoupled point
// (mu1^{-1/(p-1)}, mu2^{-1/(p-1)}) at beta = 0, tangent predictor + Newton corrector.
inline std::vector<BranchPoint> continue_branch(const SystemParams& P0, double beta_max, int steps) {
  P0.validate();
  if (!(beta_max > 0.0)) throw DomainError("continue_branch: beta_max > 0 required");
  if (steps < 1) throw DomainError("continue_branch: steps >= 1 required");
  const double p = P0.p();
  const double threshold = std::min(pow_pos(P0.mu1, -0.5 * (P0.N - 2)), pow_pos(P0.mu2, -0.5 * (P0.N - 2)));
  SystemParams P = P0;

  auto record = [&](double beta, double k, double l) {
    P.beta = beta;
    BranchPoint bp;
    bp.beta = beta;
    bp.sol.k = k;
    bp.sol.l = l;
    bp.sol.residual = detail::max_abs_alpha(alpha(P, k, l));
    bp.above_min_threshold = k + l > threshold;
    return bp;
  };

  double k = detail::kmax(P0, P0.mu1), l = detail::kmax(P0, P0.mu2), beta = 0.0;
  std::vector<BranchPoint> out{record(0.0, k, l)};
  const double h0 = beta_max / steps;
  double h = h0;
  while (beta < beta_max * (1.0 - 1e-15)) {
    const double step = std::min(h, beta_max - beta);
    // tangent: J d(k,l)/dbeta = -d(alpha)/dbeta
    P.beta = beta;
    const auto J = jacobian_at(P, k, l).J;
    const double da1 = pow_pos(k, 0.5 * p - 1.0) * pow_pos(l, 0.5 * p);
    const double da2 = pow_pos(l, 0.5 * p - 1.0) * pow_pos(k, 0.5 * p);
    const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    double kk = k, ll = l;
    if (det != 0.0 && std::isfinite(det)) {
      kk += step * (-(J[1][1] * da1 - J[0][1] * da2) / det);
      ll += step * (-(-J[1][0] * da1 + J[0][0] * da2) / det);
    }
    P.beta = beta + step;
    bool ok = kk > 0.0 && ll > 0.0;
    for (int it = 0; ok && it < 50; ++it) {
      const auto a = alpha(P, kk, ll);
      if (detail::max_abs_alpha(a) < 1e-13) break;
      const auto Jn = jacobian_at(P, kk, ll).J;
      const double dn = Jn[0][0] * Jn[1][1] - Jn[0][1] * Jn[1][0];
      if (dn == 0.0 || !std::isfinite(dn)) {
        ok = false;
        break;
      }
      const double dk = (Jn[1][1] * a.a1 - Jn[0][1] * a.a2) / dn;
      const double dl = (-Jn[1][0] * a.a1 + Jn[0][0] * a.a2) / dn;
      kk -= dk;
      ll -= dl;
      if (!(kk > 0.0) || !(ll > 0.0) || !std::isfinite(kk) || !std::isfinite(ll)) ok = false;
    }
    if (ok) ok = detail::max_abs_alpha(alpha(P, kk, ll)) < 1e-10 && std::abs(kk - k) + std::abs(ll - l) < 0.5 * (k + l);
    if (!ok) {
      h *= 0.5;
      if (h < 1e-8) throw ContinuationError("continue_branch: Newton corrector failed", beta);
      continue;
    }
    beta += step;
    k = kk;
    l = ll;
    out.push_back(record(beta, k, l));
    if (h < h0) h = std::min(h0, 2.0 * h);
  }
  return out;
}

}  // namespace critsys
