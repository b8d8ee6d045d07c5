#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "critsys/errors.hpp"
#include "critsys/params.hpp"
#include "critsys/radial.hpp"
#include "critsys/roots.hpp"

namespace critsys {

// Q_i = \int |grad w_i|^2 + lambda_i w_i^2, M_i = mu_i \int |w_i|^{2q}, X = beta \int |u|^q |v|^q.
struct PairIntegrals {
  double Q1 = 0.0, Q2 = 0.0, M1 = 0.0, M2 = 0.0, X = 0.0;
};

// The state (u, v) of the coupled problem. Integrals use the trapezoid rule;
// its weight at r = 0 vanishes, so a one-node spike there carries no mass.
struct FieldPair {
  RadialField u, v;
  PairIntegrals cached;

  FieldPair() = default;
  FieldPair(RadialField uu, RadialField vv) : u(std::move(uu)), v(std::move(vv)) {
    if (u.grid_ptr() != v.grid_ptr() && u.size() != v.size()) throw DomainError("FieldPair: fields on different grids");
  }
  const RadialGrid& grid() const { return u.grid(); }
};

inline PairIntegrals pair_integrals(const SystemParams& P, const RadialField& u, const RadialField& v, double q) {
  const auto& g = u.grid();
  const auto W = g.trapezoid_weights();
  PairIntegrals I;
  I.Q1 = dirichlet_form(g, u.values(), u.values());
  I.Q2 = dirichlet_form(g, v.values(), v.values());
  for (int i = 0; i < g.intervals(); ++i) {
    const double a = std::abs(u[i]), b = std::abs(v[i]);
    I.Q1 += W[i] * P.lambda1 * a * a;
    I.Q2 += W[i] * P.lambda2 * b * b;
    const double aq = pow_abs(a, q), bq = pow_abs(b, q);
    I.M1 += W[i] * P.mu1 * aq * aq;
    I.M2 += W[i] * P.mu2 * bq * bq;
    I.X += W[i] * P.beta * aq * bq;
  }
  return I;
}

inline PairIntegrals pair_integrals(const SystemParams& P, const FieldPair& w, double q) { return pair_integrals(P, w.u, w.v, q); }

inline void refresh(const SystemParams& P, FieldPair& w, double q) { w.cached = pair_integrals(P, w, q); }

inline double energy_from(const PairIntegrals& I, double q) {
  return 0.5 * (I.Q1 + I.Q2) - (I.M1 + 2.0 * I.X + I.M2) / (2.0 * q);
}

// E = 1/2 (Q1 + Q2) - 1/(2q) (M1 + 2X + M2); q = p is the critical problem.
inline double energy(const SystemParams& P, const FieldPair& w, double q) { return energy_from(pair_integrals(P, w, q), q); }
inline double energy(const SystemParams& P, const FieldPair& w) { return energy(P, w, P.p()); }

// Scalar functional J(u) = 1/2 \int |grad u|^2 + lambda u^2 - mu/(2q) \int |u|^{2q}.
inline double scalar_energy(const RadialField& u, double lambda, double mu, double q) {
  const auto& g = u.grid();
  const auto W = g.trapezoid_weights();
  double Q = dirichlet_form(u), M = 0.0;
  for (int i = 0; i < g.intervals(); ++i) {
    Q += W[i] * lambda * u[i] * u[i];
    M += W[i] * mu * std::pow(pow_abs(u[i], q), 2.0);
  }
  return 0.5 * Q - M / (2.0 * q);
}

// Nodal source terms f_u = mu1 |u|^{2q-2} u + beta |u|^{q-2} u |v|^q and f_v.
struct Sources {
  std::vector<double> fu, fv;
};

inline Sources sources(const SystemParams& P, std::span<const double> u, std::span<const double> v, double q) {
  const std::size_t n = u.size();
  Sources s{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double a = std::abs(u[i]), b = std::abs(v[i]);
    const double aq = pow_abs(a, q), bq = pow_abs(b, q);
    const double su = u[i] < 0 ? -1.0 : 1.0, sv = v[i] < 0 ? -1.0 : 1.0;
    // |u|^{q-2} u = sign(u) |u|^{q-1}
    const double aqm1 = a > 0.0 ? aq / a : 0.0, bqm1 = b > 0.0 ? bq / b : 0.0;
    s.fu[i] = su * aqm1 * (P.mu1 * aq + P.beta * bq);
    s.fv[i] = sv * bqm1 * (P.mu2 * bq + P.beta * aq);
  }
  return s;
}

// dE divided by the cell volumes W: g_u = (K u + w (lambda1 u - f_u))/W with
// trapezoid weights w. Zero at r = R.
struct PairGradient {
  std::vector<double> gu, gv;
};

inline PairGradient gradient(const SystemParams& P, const FieldPair& w, double q) {
  const auto& g = w.grid();
  const auto W = g.cell_volumes();
  const auto m = g.trapezoid_weights();
  const auto Ku = stiffness_apply(g, w.u.values());
  const auto Kv = stiffness_apply(g, w.v.values());
  const auto s = sources(P, w.u.values(), w.v.values(), q);
  const int M = g.intervals();
  PairGradient G{std::vector<double>(M + 1, 0.0), std::vector<double>(M + 1, 0.0)};
  for (int i = 0; i < M; ++i) {
    G.gu[i] = (Ku[i] + m[i] * (P.lambda1 * w.u[i] - s.fu[i])) / W[i];
    G.gv[i] = (Kv[i] + m[i] * (P.lambda2 * w.v[i] - s.fv[i])) / W[i];
  }
  return G;
}

inline PairGradient gradient(const SystemParams& P, const FieldPair& w) { return gradient(P, w, P.p()); }

struct ResidualNorms {
  double res_u = 0.0;
  double res_v = 0.0;
  double total() const { return std::hypot(res_u, res_v); }
};

inline double weighted_norm(const RadialGrid& g, std::span<const double> f) {
  const auto W = g.cell_volumes();
  double s = 0.0;
  for (int i = 0; i < g.intervals(); ++i) s += W[i] * f[i] * f[i];
  return std::sqrt(s);
}

// Discrete L^2 norms of both Euler-Lagrange residuals.
inline ResidualNorms residual(const SystemParams& P, const FieldPair& w, double q) {
  const auto G = gradient(P, w, q);
  return {weighted_norm(w.grid(), G.gu), weighted_norm(w.grid(), G.gv)};
}

inline ResidualNorms residual(const SystemParams& P, const FieldPair& w) { return residual(P, w, P.p()); }

struct Scaling {
  double t = 1.0;
  double s = 1.0;
};

// Newton on Q1 a^r = M1 a + X b, Q2 b^r = M2 b + X a from an eliminated root; b from
// the first equation loses digits when Q2 << Q1. Steps are kept only if they help.
inline Scaling polish_scaling(const PairIntegrals& I, double q, double a, double b) {
  const double r = (2.0 - q) / q;
  auto res = [&](double x, double y) {
    return std::array<double, 2>{I.Q1 * std::pow(x, r) - I.M1 * x - I.X * y, I.Q2 * std::pow(y, r) - I.M2 * y - I.X * x};
  };
  auto size = [&](const std::array<double, 2>& F) { return std::abs(F[0]) / I.Q1 + std::abs(F[1]) / I.Q2; };
  auto F = res(a, b);
  double e = size(F);
  for (int it = 0; it < 6 && e > 0.0; ++it) {
    const double j11 = r * I.Q1 * std::pow(a, r - 1.0) - I.M1, j12 = -I.X;
    const double j21 = -I.X, j22 = r * I.Q2 * std::pow(b, r - 1.0) - I.M2;
    const double det = j11 * j22 - j12 * j21;
    if (det == 0.0 || !std::isfinite(det)) break;
    const double a1 = a - (j22 * F[0] - j12 * F[1]) / det;
    const double b1 = b - (-j21 * F[0] + j11 * F[1]) / det;
    if (!(a1 > 0.0 && b1 > 0.0)) break;
    const auto F1 = res(a1, b1);
    const double e1 = size(F1);
    if (!(e1 < e)) break;
    a = a1, b = b1, F = F1, e = e1;
  }
  return {std::pow(a, 1.0 / q), std::pow(b, 1.0 / q)};
}

// (t, s) putting (t u, s v) on {Q1 = M1 + X, Q2 = M2 + X}. With a = t^q, b = s^q and
// r = (2-q)/q the system reads Q1 a^r = M1 a + X b, Q2 b^r = M2 b + X a; b is
// eliminated through the first equation and the second solved in a.
inline Scaling project_two_constraint(const PairIntegrals& I, double q) {
  if (!(I.M1 > 0.0) || !(I.M2 > 0.0)) throw DomainError("project_two_constraint: both components must be nonzero");
  if (!(I.Q1 > 0.0) || !(I.Q2 > 0.0)) throw DomainError("project_two_constraint: quadratic forms must be positive");
  const double e = 1.0 / (2.0 * q - 2.0);
  if (I.X == 0.0) return {std::pow(I.Q1 / I.M1, e), std::pow(I.Q2 / I.M2, e)};
  const double r = (2.0 - q) / q;
  const double ax = std::abs(I.X);
  const double a_edge = std::pow(I.Q1 / I.M1, 1.0 / (1.0 - r));
  if (I.X < 0.0) {
    if (!(I.M1 * I.M2 > I.X * I.X)) throw NoProjectionError("project_two_constraint: M1 M2 <= X^2, pair too overlapped");
    auto b_of = [&](double a) { return std::max(0.0, (I.M1 * a - I.Q1 * std::pow(a, r)) / ax); };
    auto fdf = [&](double a) {
      const double b = b_of(a);
      const double br = b > 0.0 ? std::pow(b, r) : 0.0;
      const double f = I.Q2 * br - I.M2 * b + ax * a;
      const double db = (I.M1 - r * I.Q1 * std::pow(a, r - 1.0)) / ax;
      const double df = b > 0.0 ? (r * I.Q2 * br / b - I.M2) * db + ax : -std::numeric_limits<double>::infinity();
      return std::pair{f, df};
    };
    double hi = 2.0 * a_edge;
    for (int it = 0; fdf(hi).first > 0.0; ++it) {
      if (it > 2000) throw NoProjectionError("project_two_constraint: no sign change");
      hi *= 2.0;
    }
    const double a = roots::hybrid_newton(fdf, {a_edge, hi}, 1e-16);
    const double b = b_of(a);
    if (!(b > 0.0)) throw NoProjectionError("project_two_constraint: degenerate scaling");
    return polish_scaling(I, q, a, b);
  }
  // beta > 0: b = (Q1 a^r - M1 a)/X on (0, a_edge); first sign change below a_edge
  auto b_of = [&](double a) { return std::max(0.0, (I.Q1 * std::pow(a, r) - I.M1 * a) / ax); };
  auto F = [&](double a) { return I.Q2 * std::pow(b_of(a), r) - I.M2 * b_of(a) - ax * a; };
  const int n = 400;
  double prev_a = a_edge, prev_f = F(a_edge);
  for (int i = 1; i <= n; ++i) {
    const double a = a_edge * std::pow(10.0, -12.0 * i / n);
    const double f = F(a);
    if ((f > 0.0) != (prev_f > 0.0)) {
      const double root = roots::bisect(F, {a, prev_a}, 1e-16);
      if (!(b_of(root) > 0.0)) throw NoProjectionError("project_two_constraint: degenerate scaling");
      return polish_scaling(I, q, root, b_of(root));
    }
    prev_a = a;
    prev_f = f;
  }
  throw NoProjectionError("project_two_constraint: no scaling found for beta > 0");
}

inline Scaling project_two_constraint(const SystemParams& P, const FieldPair& w, double q) {
  return project_two_constraint(pair_integrals(P, w, q), q);
}
inline Scaling project_two_constraint(const SystemParams& P, const FieldPair& w) { return project_two_constraint(P, w, P.p()); }

// t^{2q-2} = (Q1 + Q2)/(M1 + 2X + M2): common scaling onto the one-constraint set.
inline double project_single_constraint(const PairIntegrals& I, double q) {
  const double den = I.M1 + 2.0 * I.X + I.M2;
  const double num = I.Q1 + I.Q2;
  if (!(den > 0.0) || !(num > 0.0)) throw DomainError("project_single_constraint: degenerate denominator");
  return std::pow(num / den, 1.0 / (2.0 * q - 2.0));
}

inline double project_single_constraint(const SystemParams& P, const FieldPair& w, double q) {
  return project_single_constraint(pair_integrals(P, w, q), q);
}
inline double project_single_constraint(const SystemParams& P, const FieldPair& w) {
  return project_single_constraint(P, w, P.p());
}

inline FieldPair scaled(const FieldPair& w, Scaling ts) {
  FieldPair out = w;
  for (auto& x : out.u.data()) x *= ts.t;
  for (auto& x : out.v.data()) x *= ts.s;
  return out;
}

}  // namespace critsys
