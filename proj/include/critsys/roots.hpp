#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <utility>

#include "critsys/errors.hpp"

namespace critsys::roots {

struct Bracket {
  double lo;
  double hi;
};

// Bisection safeguarded Newton on a sign-changing bracket [lo, hi].
// `fdf` returns (f, f'). Newton steps leaving the bracket or shrinking it too
// slowly fall back to bisection. Stops when the bracket width is below
// rel_tol * |x| + abs_tol.
template <class FDF>
double hybrid_newton(FDF&& fdf, Bracket b, double rel_tol = 1e-15, double abs_tol = 0.0, int max_iter = 400) {
  auto [flo, dlo] = fdf(b.lo);
  auto [fhi, dhi] = fdf(b.hi);
  (void)dlo;
  (void)dhi;
  if (flo == 0.0) return b.lo;
  if (fhi == 0.0) return b.hi;
  if ((flo > 0.0) == (fhi > 0.0)) throw BracketError("hybrid_newton: endpoints do not bracket a root", 2);
  // orient so that f(lo) < 0
  double lo = b.lo, hi = b.hi;
  if (flo > 0.0) std::swap(lo, hi);
  double x = 0.5 * (lo + hi);
  double dx_old = std::abs(hi - lo);
  double dx = dx_old;
  auto [f, df] = fdf(x);
  for (int it = 0; it < max_iter; ++it) {
    const bool newton_ok = df != 0.0 && std::isfinite(df) &&
                           (((x - hi) * df - f) * ((x - lo) * df - f) < 0.0) &&
                           (std::abs(2.0 * f) < std::abs(dx_old * df));
    dx_old = dx;
    if (newton_ok) {
      dx = f / df;
      x -= dx;
    } else {
      dx = 0.5 * (hi - lo);
      x = lo + dx;
    }
    const double tol = rel_tol * std::abs(x) + abs_tol;
    if (std::abs(dx) <= tol || std::abs(hi - lo) <= tol) return x;
    std::tie(f, df) = fdf(x);
    if (f == 0.0) return x;
    if (f < 0.0)
      lo = x;
    else
      hi = x;
  }
  return x;
}

// Plain bisection for functions without a usable derivative.
template <class F>
double bisect(F&& f, Bracket b, double rel_tol = 1e-15, double abs_tol = 0.0, int max_iter = 2000) {
  double flo = f(b.lo);
  double fhi = f(b.hi);
  if (flo == 0.0) return b.lo;
  if (fhi == 0.0) return b.hi;
  if ((flo > 0.0) == (fhi > 0.0)) throw BracketError("bisect: endpoints do not bracket a root", 2);
  double lo = b.lo, hi = b.hi;
  for (int it = 0; it < max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
    if (std::abs(hi - lo) <= rel_tol * std::abs(mid) + abs_tol) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace critsys::roots
