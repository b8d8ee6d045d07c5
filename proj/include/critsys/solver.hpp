#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "critsys/coupling.hpp"
#include "critsys/errors.hpp"
#include "critsys/functional.hpp"
#include "critsys/instanton.hpp"
#include "critsys/radial.hpp"

namespace critsys {

enum class SolveMode { two_constraint, mountain_pass };

enum class InitPreset { automatic, instanton_pair, disjoint_bumps, disjoint_bumps_swapped };

inline const char* to_string(SolveMode m) { return m == SolveMode::two_constraint ? "two_constraint" : "mountain_pass"; }

inline const char* to_string(InitPreset p) {
  switch (p) {
    case InitPreset::automatic: return "automatic";
    case InitPreset::instanton_pair: return "instanton_pair";
    case InitPreset::disjoint_bumps: return "disjoint_bumps";
    case InitPreset::disjoint_bumps_swapped: return "disjoint_bumps_swapped";
  }
  return "?";
}

struct SolverOptions {
  double tol = 1e-7;            // discrete L^2 Euler-Lagrange residual
  double energy_tol = 1e-12;    // |E_k - E_{k-window}| relative to max(1, |E|)
  int energy_window = 10;
  int max_iter = 100000;
  double armijo = 1e-4;
  bool newton_polish = true;
  double newton_switch = 1e-3;  // residual relative to the source norm at hand-over
  int newton_max = 80;
  bool validate_lambda = true;
};

struct SolveStats {
  int iterations = 0;
  int newton_steps = 0;
  double residual = 0.0;
  double res_u = 0.0;
  double res_v = 0.0;
  double energy = 0.0;
  bool converged = false;
  bool roundoff_limited = false;     // Newton stalled below the roundoff floor instead of tol
  double max_energy_increase = 0.0;  // largest uphill jump of an accepted descent step
  double max_nehari_gap = 0.0;       // worst constraint violation over accepted descent iterates
};

struct ScalarResult {
  RadialField u;
  double B = 0.0;
  SolveStats stats;
};

struct BasinRecord {
  std::string preset;
  bool converged = false;
  bool resolved = true;
  double energy = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

struct NamedValue {
  std::string name;
  double value = 0.0;
};

struct EnergyReport {
  double B = 0.0;
  double B_mu1 = 0.0;
  double B_mu2 = 0.0;
  std::optional<double> A;
  double S = 0.0;
  double lambda1_omega = 0.0;
  std::vector<NamedValue> thresholds;
  double residual_norm = 0.0;
  double res_u = 0.0;
  double res_v = 0.0;
  int iterations = 0;
  int newton_steps = 0;
  double nehari_identity_gap = 0.0;  // |B - (1/N)(Q1 + Q2)|
  double ratio_deviation = 0.0;      // relative std of u/v where both are resolved
  double max_energy_increase = 0.0;
  std::string mode;
  std::string basin;
  std::vector<BasinRecord> basins;
  std::vector<std::pair<double, double>> eps_energies;  // subcritical chain: (eps, E_eps)
  std::vector<std::string> warnings;
};

struct CoupledResult {
  FieldPair pair;
  EnergyReport report;
};

namespace detail {

enum class Constraint { scalar, two, joint };

// Newton stalls are accepted as converged below this multiple of the rounding
// error bound of the stiffness product (it grows like 1/h^2 under refinement).
inline constexpr double kRoundoffSafety = 4.0;

inline double roundoff_floor(const RadialField& u) {
  const auto& g = u.grid();
  const auto a = g.face_coefficients();
  const auto W = g.cell_volumes();
  std::vector<double> b(g.size(), 0.0);
  for (int i = 0; i < g.intervals(); ++i) {
    const double left = i > 0 ? a[i - 1] * (std::abs(u[i]) + std::abs(u[i - 1])) : 0.0;
    b[i] = (left + a[i] * (std::abs(u[i]) + std::abs(u[i + 1]))) / W[i];
  }
  return kRoundoffSafety * std::numeric_limits<double>::epsilon() * weighted_norm(g, b);
}

inline FieldPair apply_constraint(const SystemParams& P, const FieldPair& w, Constraint c, double q) {
  const auto I = pair_integrals(P, w, q);
  switch (c) {
    case Constraint::scalar: {
      const double t = project_single_constraint(I, q);
      return scaled(w, {t, 0.0});
    }
    case Constraint::joint: {
      const double t = project_single_constraint(I, q);
      return scaled(w, {t, t});
    }
    case Constraint::two: return scaled(w, project_two_constraint(I, q));
  }
  return w;
}

inline double nehari_gap(const PairIntegrals& I, Constraint c) {
  switch (c) {
    case Constraint::scalar: return std::abs(I.Q1 - I.M1) / std::max(1.0, I.Q1);
    case Constraint::joint:
      return std::abs(I.Q1 + I.Q2 - I.M1 - 2.0 * I.X - I.M2) / std::max(1.0, I.Q1 + I.Q2);
    case Constraint::two:
      return std::max(std::abs(I.Q1 - I.M1 - I.X) / std::max(1.0, I.Q1), std::abs(I.Q2 - I.M2 - I.X) / std::max(1.0, I.Q2));
  }
  return 0.0;
}

// Values this small relative to the field maximum are rounding residue of the
// linear solves; in a repulsive dead core they would otherwise feed the
// infinitely steep |u|^{q-1} coupling term.
inline constexpr double kSnapToZero = 1e-14;

inline constexpr double kShrink = 0.1;

// Relative energy change treated as rounding noise in the line search.
inline constexpr double kEnergyJitter = 1e-13;

inline void make_nonnegative(RadialField& f) {
  double m = 0.0;
  for (auto& x : f.data()) m = std::max(m, x = std::abs(x));
  for (auto& x : f.data())
    if (x < kSnapToZero * m) x = 0.0;
  f.enforce_boundary();
}

inline void make_nonnegative(FieldPair& w) {
  make_nonnegative(w.u);
  make_nonnegative(w.v);
}

struct Engine {
  const SystemParams& P;
  Constraint constraint;
  double q;
  const SolverOptions& opt;
  bool scalar() const { return constraint == Constraint::scalar; }

  double pair_residual(const FieldPair& w) const {
    const auto G = gradient(P, w, q);
    return std::hypot(weighted_norm(w.grid(), G.gu), scalar() ? 0.0 : weighted_norm(w.grid(), G.gv));
  }

  double source_norm(const FieldPair& w) const {
    const auto s = sources(P, w.u.values(), w.v.values(), q);
    return weighted_norm(w.grid(), s.fu) + weighted_norm(w.grid(), s.fv);
  }

  // H^1 metric K + c W, plus the lagged repulsion |beta| |y|^q |x|^{q-2} W on the
  // diagonal when beta < 0 (a Picard linearization of the absorption term).
  Tridiagonal metric(const Tridiagonal& T0, const RadialField& x, const RadialField& y) const {
    if (P.beta >= 0.0 || scalar()) return T0;
    Tridiagonal T = T0;
    const auto W = x.grid().trapezoid_weights();
    const double floor = 1e-8 * std::max(x.max_abs(), 1e-300);
    for (std::size_t i = 0; i < T.diag.size(); ++i) {
      const double ax = std::max(std::abs(x[i]), floor);
      T.diag[i] += W[i] * std::abs(P.beta) * pow_abs(y[i], q) * std::pow(ax, q - 2.0);
    }
    return T;
  }

  // Nodal Gauss-Seidel on tail nodes where the repulsion |beta| |y|^q |x|^{q-2}
  // outweighs the stiffness: the nodal equation is solved exactly by bisection,
  // which neither descent nor Newton resolves (tails decay doubly exponentially).
  void relax_tails(FieldPair& w) const {
    if (P.beta >= 0.0 || scalar()) return;
    const auto& g = w.grid();
    const int M = g.intervals();
    const auto a = g.face_coefficients();
    const auto W = g.trapezoid_weights();
    for (int blk = 0; blk < 2; ++blk) {
      auto& x = blk == 0 ? w.u : w.v;
      const auto& y = blk == 0 ? w.v : w.u;
      const double lam = blk == 0 ? P.lambda1 : P.lambda2;
      const double mu = blk == 0 ? P.mu1 : P.mu2;
      const double cap = 1e-2 * x.max_abs();
      for (int pass = 0; pass < 2; ++pass) {
        for (int k = 0; k < M; ++k) {
          const int i = pass == 0 ? k : M - 1 - k;
          const double xi = x[i];
          if (xi > cap) continue;
          const double D = a[i] + (i > 0 ? a[i - 1] : 0.0) + W[i] * lam;
          const double c = W[i] * std::abs(P.beta) * pow_abs(y[i], q);
          if (D <= 0.0 || (xi > 0.0 && c * std::pow(xi, q - 2.0) < D)) continue;
          const double b = (i > 0 ? a[i - 1] * x[i - 1] : 0.0) + (i + 1 < M ? a[i] * x[i + 1] : 0.0);
          auto phi = [&](double t) { return D * t + c * std::pow(t, q - 1.0) - W[i] * mu * std::pow(t, 2.0 * q - 1.0) - b; };
          if (b <= 0.0) {
            x[i] = 0.0;
            continue;
          }
          double hi = std::min(b / D, cap);
          if (phi(hi) < 0.0) continue;  // source-dominated: leave it to the global step
          double lo = 0.0;
          for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (phi(mid) > 0.0 ? hi : lo) = mid;
          }
          x[i] = 0.5 * (lo + hi);
        }
      }
    }
  }

  // Preconditioned descent with Armijo backtracking; returns when the relative
  // residual drops below `switch_rel`, the energy test passes, or the budget is spent.
  void descend(FieldPair& w, SolveStats& st, std::vector<double>& hist, double switch_rel, int budget) const {
    const auto& g = w.grid();
    const int M = g.intervals();
    const double c = std::max(std::abs(P.lambda1), std::abs(P.lambda2)) + 1.0;
    const Tridiagonal T0 = shifted_stiffness(g, c);
    const auto W = g.cell_volumes();
    double E = energy(P, w, q);
    for (int it = 0; it < budget && st.iterations < opt.max_iter; ++it) {
      const auto G = gradient(P, w, q);
      const double res = std::hypot(weighted_norm(g, G.gu), scalar() ? 0.0 : weighted_norm(g, G.gv));
      st.residual = res;
      if (res < opt.tol && energy_settled(hist, E)) return;
      if (res < switch_rel * source_norm(w)) return;
      std::vector<double> ru(M), rv(M);
      for (int i = 0; i < M; ++i) {
        ru[i] = W[i] * G.gu[i];
        rv[i] = W[i] * G.gv[i];
      }
      auto zu = metric(T0, w.u, w.v).solve(ru);
      std::vector<double> zv = scalar() ? std::vector<double>(M, 0.0) : metric(T0, w.v, w.u).solve(rv);
      double slope = 0.0;
      for (int i = 0; i < M; ++i) slope += ru[i] * zu[i] + rv[i] * zv[i];
      double tau = 1.0;
      bool accepted = false;
      FieldPair trial;
      double Et = E;
      while (tau > 1e-14) {
        trial = w;
        for (int i = 0; i < M; ++i) {
          trial.u[i] -= tau * zu[i];
          trial.v[i] -= tau * zv[i];
        }
        make_nonnegative(trial);
        relax_tails(trial);
        try {
          trial = apply_constraint(P, trial, constraint, q);
          Et = energy(P, trial, q);
          if (Et <= E - opt.armijo * tau * slope) {
            accepted = true;
            break;
          }
          // energy flat to rounding: fall back to residual decrease
          if (std::abs(Et - E) <= kEnergyJitter * std::max(1.0, std::abs(E)) && pair_residual(trial) < res) {
            accepted = true;
            break;
          }
        } catch (const NoProjectionError&) {
        } catch (const DomainError&) {
        }
        tau *= 0.5;
      }
      if (!accepted) return;  // stalled: nothing left to gain at this resolution
      st.max_energy_increase = std::max(st.max_energy_increase, Et - E);
      st.max_nehari_gap = std::max(st.max_nehari_gap, nehari_gap(pair_integrals(P, trial, q), constraint));
      w = std::move(trial);
      E = Et;
      hist.push_back(E);
      ++st.iterations;
    }
  }

  bool energy_settled(const std::vector<double>& hist, double E) const {
    if (hist.empty()) return false;
    const std::size_t w = std::min<std::size_t>(opt.energy_window, hist.size() - 1);
    if (w == 0) return false;
    return std::abs(E - hist[hist.size() - 1 - w]) <= opt.energy_tol * std::max(1.0, std::abs(E));
  }

  // Residual vector F = K x + W (lambda x - f(x)) on interior unknowns.
  Eigen::VectorXd full_residual(const FieldPair& w) const {
    const auto& g = w.grid();
    const int M = g.intervals();
    const auto W = g.trapezoid_weights();
    const auto Ku = stiffness_apply(g, w.u.values());
    const auto Kv = stiffness_apply(g, w.v.values());
    const auto s = sources(P, w.u.values(), w.v.values(), q);
    const int n = scalar() ? M : 2 * M;
    Eigen::VectorXd F(n);
    for (int i = 0; i < M; ++i) {
      F[i] = Ku[i] + W[i] * (P.lambda1 * w.u[i] - s.fu[i]);
      if (!scalar()) F[M + i] = Kv[i] + W[i] * (P.lambda2 * w.v[i] - s.fv[i]);
    }
    return F;
  }

  double merit(const FieldPair& w, const Eigen::VectorXd& F) const {
    const auto W = w.grid().cell_volumes();
    const int M = w.grid().intervals();
    double s = 0.0;
    for (int i = 0; i < F.size(); ++i) s += F[i] * F[i] / W[i % M];
    return std::sqrt(s);
  }

  Eigen::SparseMatrix<double> jacobian(const FieldPair& w) const {
    const auto& g = w.grid();
    const int M = g.intervals();
    const auto a = g.face_coefficients();
    const auto W = g.trapezoid_weights();
    const int n = scalar() ? M : 2 * M;
    const double floor = 1e-12 * std::max(w.u.max_abs(), w.v.max_abs());
    std::vector<Eigen::Triplet<double>> T;
    T.reserve(8 * M);
    for (int blk = 0; blk < (scalar() ? 1 : 2); ++blk) {
      const int o = blk * M;
      const auto& x = blk == 0 ? w.u : w.v;
      const auto& y = blk == 0 ? w.v : w.u;
      const double lam = blk == 0 ? P.lambda1 : P.lambda2;
      const double mu = blk == 0 ? P.mu1 : P.mu2;
      for (int i = 0; i < M; ++i) {
        const double ax = std::max(std::abs(x[i]), floor), ay = std::abs(y[i]);
        const double xq = std::pow(ax, q), yq = pow_abs(ay, q);
        const double df_dx = mu * (2.0 * q - 1.0) * xq * xq / (ax * ax) + P.beta * (q - 1.0) * xq / (ax * ax) * yq;
        T.emplace_back(o + i, o + i, a[i] + (i > 0 ? a[i - 1] : 0.0) + W[i] * (lam - df_dx));
        if (i + 1 < M) {
          T.emplace_back(o + i, o + i + 1, -a[i]);
          T.emplace_back(o + i + 1, o + i, -a[i]);
        }
        if (!scalar() && ay > 0.0) {
          const double df_dy = P.beta * q * (xq / ax) * (yq / ay);
          T.emplace_back(o + i, (o + M + i) % n, -W[i] * df_dy);
        }
      }
    }
    Eigen::SparseMatrix<double> J(n, n);
    J.setFromTriplets(T.begin(), T.end());
    return J;
  }

  // Newton on the Euler-Lagrange system with residual line search; each iterate is
  // made nonnegative and re-projected. Returns true on convergence.
  bool polish(FieldPair& w, SolveStats& st, std::vector<double>& hist) const {
    const int M = w.grid().intervals();
    Eigen::VectorXd F = full_residual(w);
    double res = merit(w, F);
    double E = energy(P, w, q);
    for (int k = 0; k < opt.newton_max; ++k) {
      if (res < opt.tol && k > 0 && energy_settled(hist, E)) {
        st.residual = res;
        return true;
      }
      // symmetric Jacobi scaling: row scales span many decades on graded grids
      Eigen::SparseMatrix<double> J = jacobian(w);
      Eigen::VectorXd s = J.diagonal().cwiseAbs().cwiseSqrt().cwiseInverse();
      const Eigen::SparseMatrix<double> Js = s.asDiagonal() * J * s.asDiagonal();
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
      lu.compute(Js);
      if (lu.info() != Eigen::Success) return false;
      const Eigen::VectorXd d = s.cwiseProduct(lu.solve(-s.cwiseProduct(F)));
      double tau = 1.0;
      bool accepted = false;
      FieldPair trial;
      Eigen::VectorXd Ft;
      double rt = res;
      while (tau > 1e-6) {
        trial = w;
        // Newton overshoots the concave |u|^{q-1} term from above; cap each
        // nodal decrease at a factor kShrink.
        for (int i = 0; i < M; ++i) {
          trial.u[i] = std::max(w.u[i] + tau * d[i], kShrink * w.u[i]);
          if (!scalar()) trial.v[i] = std::max(w.v[i] + tau * d[M + i], kShrink * w.v[i]);
        }
        make_nonnegative(trial);
        relax_tails(trial);
        try {
          trial = apply_constraint(P, trial, constraint, q);
          Ft = full_residual(trial);
          rt = merit(trial, Ft);
          if (rt < (1.0 - 1e-4 * tau) * res) {
            accepted = true;
            break;
          }
        } catch (const NoProjectionError&) {
        } catch (const DomainError&) {
        }
        tau *= 0.5;
      }
      if (!accepted) {
        st.residual = res;
        if (res < opt.tol) return true;
        st.roundoff_limited = res < std::hypot(roundoff_floor(w.u), roundoff_floor(w.v));
        return st.roundoff_limited;
      }
      w = std::move(trial);
      F = std::move(Ft);
      res = rt;
      E = energy(P, w, q);
      hist.push_back(E);
      ++st.newton_steps;
      ++st.iterations;
    }
    st.residual = res;
    return res < opt.tol && energy_settled(hist, E);
  }

  SolveStats run(FieldPair& w) const {
    SolveStats st;
    make_nonnegative(w);
    w = apply_constraint(P, w, constraint, q);
    std::vector<double> hist{energy(P, w, q)};
    double switch_rel = opt.newton_polish ? opt.newton_switch : 0.0;
    bool done = false;
    while (!done && st.iterations < opt.max_iter) {
      const int before = st.iterations;
      descend(w, st, hist, switch_rel, opt.max_iter);
      if (st.residual < opt.tol && energy_settled(hist, hist.back())) {
        done = true;
        break;
      }
      if (!opt.newton_polish) break;
      FieldPair trial = w;
      SolveStats nst = st;
      std::vector<double> nh = hist;
      if (polish(trial, nst, nh)) {
        w = std::move(trial);
        st = nst;
        hist = std::move(nh);
        done = true;
        break;
      }
      switch_rel *= 0.1;
      if (switch_rel < 1e-14 && st.iterations == before) break;
    }
    const auto G = gradient(P, w, q);
    st.res_u = weighted_norm(w.grid(), G.gu);
    st.res_v = scalar() ? 0.0 : weighted_norm(w.grid(), G.gv);
    st.residual = std::hypot(st.res_u, st.res_v);
    st.energy = energy(P, w, q);
    st.converged = st.residual < opt.tol || st.roundoff_limited;
    return st;
  }
};

inline double admissible_lambda1(const RadialGrid& g) { return first_eigenvalue(g); }

inline void check_admissible(double lambda, double lam1, const char* which) {
  if (!(lambda > -lam1 && lambda < 0.0))
    throw AdmissibilityError(std::string(which) + " must lie in (-lambda_1(Omega), 0) = (" + std::to_string(-lam1) +
                             ", 0), got " + std::to_string(lambda));
}

}  // namespace detail

// U_eps(r) - U_eps(R) scaled by (sqrt k0, sqrt l0) when beta > 0 admits a coupling root.
inline FieldPair preset_pair(const SystemParams& P, GridPtr g, InitPreset preset) {
  const double R = g->radius();
  if (preset == InitPreset::instanton_pair || preset == InitPreset::automatic) {
    const Instanton U{P.N, 0.3 * R, {}};
    const double UR = U.at_radius(R);
    double sk = 1.0, sl = 1.0;
    if (P.beta > 0.0) {
      try {
        const auto s = solve_k0_l0(P);
        sk = std::sqrt(s.k);
        sl = std::sqrt(s.l);
      } catch (const Error&) {
      }
    }
    auto u = RadialField::from_function(g, [&](double r) { return sk * (U.at_radius(r) - UR); });
    auto v = RadialField::from_function(g, [&](double r) { return sl * (U.at_radius(r) - UR); });
    return {u, v};
  }
  // inner ball of radius R/2, outer annulus
  const double rho = 0.5 * R;
  const double pi = std::numbers::pi;
  auto inner = RadialField::from_function(g, [&](double r) {
    return r < rho ? std::pow(std::cos(0.5 * pi * r / rho), 2) : 0.0;
  });
  auto outer = RadialField::from_function(g, [&](double r) {
    return r > rho ? std::pow(std::sin(pi * (r - rho) / (R - rho)), 2) : 0.0;
  });
  if (preset == InitPreset::disjoint_bumps) return {inner, outer};
  return {outer, inner};
}

// Positive radial least-energy solution of -Delta u + lambda_i u = mu_i u^{2*-1} on the ball.
inline ScalarResult scalar_ground_state(const SystemParams& P, int which, GridPtr g, const SolverOptions& opt = {},
                                        double q = 0.0) {
  P.validate();
  if (which != 1 && which != 2) throw DomainError("scalar_ground_state: which must be 1 or 2");
  SystemParams S = which == 1 ? P : P.swapped();
  S.beta = 0.0;
  S.mu2 = 1.0;
  S.lambda2 = 0.0;
  if (opt.validate_lambda) detail::check_admissible(S.lambda1, detail::admissible_lambda1(*g), which == 1 ? "lambda1" : "lambda2");
  if (q == 0.0) q = P.p();
  const double pi = std::numbers::pi;
  FieldPair w{RadialField::from_function(g, [&](double r) { return std::cos(0.5 * pi * r / g->radius()); }), RadialField(g)};
  SolverOptions so = opt;
  so.tol = std::min(opt.tol, 1e-8);
  const detail::Engine eng{S, detail::Constraint::scalar, q, so};
  const auto st = eng.run(w);
  if (!st.converged)
    throw ConvergenceError("scalar_ground_state: residual " + std::to_string(st.residual) + " after " +
                               std::to_string(st.iterations) + " iterations",
                           st.iterations, st.residual);
  return {w.u, st.energy, st};
}

// A profile counts as resolved when at least `min_nodes` nodes carry half its peak;
// anything narrower is a grid-scale concentration, not a solution of the PDE.
inline bool resolved(const RadialField& u, int min_nodes = 4) {
  const double m = u.max_abs();
  if (m == 0.0) return false;
  int n = 0;
  for (std::size_t i = 0; i + 1 < u.size(); ++i) n += std::abs(u[i]) >= 0.5 * m;
  return n >= min_nodes;
}

inline double ratio_deviation(const FieldPair& w) {
  const double mu = w.u.max_abs(), mv = w.v.max_abs();
  double s = 0.0, s2 = 0.0;
  int n = 0;
  for (std::size_t i = 0; i + 1 < w.u.size(); ++i) {
    if (w.u[i] > 1e-3 * mu && w.v[i] > 1e-3 * mv) {
      const double r = w.u[i] / w.v[i];
      s += r;
      s2 += r * r;
      ++n;
    }
  }
  if (n < 2) return std::numeric_limits<double>::infinity();
  const double m = s / n;
  return std::sqrt(std::max(0.0, s2 / n - m * m)) / m;
}

// Comparison constants for B: the mixed scalar+bubble levels and A for beta < 0,
// min(B_mu1, B_mu2, A) for beta > 0.
inline std::vector<NamedValue> energy_thresholds(const SystemParams& P, double B_mu1, double B_mu2, double S,
                                                 const std::optional<double>& A) {
  const double SN = std::pow(S, 0.5 * P.N);
  const double bubble1 = pow_pos(P.mu1, -P.inv_pm1()) * SN / P.N;
  const double bubble2 = pow_pos(P.mu2, -P.inv_pm1()) * SN / P.N;
  std::vector<NamedValue> t;
  if (P.beta < 0.0) {
    t.push_back({"B_mu1+bubble_mu2", B_mu1 + bubble2});
    t.push_back({"B_mu2+bubble_mu1", B_mu2 + bubble1});
  } else {
    t.push_back({"B_mu1", B_mu1});
    t.push_back({"B_mu2", B_mu2});
  }
  if (A) t.push_back({"A", *A});
  return t;
}

namespace detail {

inline EnergyReport base_report(const SystemParams& P, GridPtr g, const SolverOptions& opt) {
  EnergyReport rep;
  rep.lambda1_omega = admissible_lambda1(*g);
  rep.S = compute_S(P.N).S;
  SolverOptions so = opt;
  so.validate_lambda = false;
  rep.B_mu1 = scalar_ground_state(P, 1, g, so).B;
  rep.B_mu2 = (P.mu1 == P.mu2 && P.lambda1 == P.lambda2) ? rep.B_mu1 : scalar_ground_state(P, 2, g, so).B;
  try {
    SobolevData sd;
    sd.N = P.N;
    sd.S = rep.S;
    rep.A = limit_energy_A(P, sd);
  } catch (const NoClosedFormError&) {
    rep.warnings.push_back("A has no closed form for 0 < beta < (p-1) max(mu); omitted");
  }
  rep.thresholds = energy_thresholds(P, rep.B_mu1, rep.B_mu2, rep.S, rep.A);
  return rep;
}

inline void finish_report(const SystemParams& P, const FieldPair& w, const SolveStats& st, EnergyReport& rep, double q) {
  rep.B = st.energy;
  rep.residual_norm = st.residual;
  rep.res_u = st.res_u;
  rep.res_v = st.res_v;
  rep.iterations = st.iterations;
  rep.newton_steps = st.newton_steps;
  rep.max_energy_increase = st.max_energy_increase;
  const auto I = pair_integrals(P, w, q);
  rep.nehari_identity_gap = std::abs(rep.B - (0.5 - 0.5 / q) * (I.Q1 + I.Q2));
  rep.ratio_deviation = ratio_deviation(w);
  for (const auto& t : rep.thresholds)
    if (rep.B >= t.value) rep.warnings.push_back("B exceeds threshold " + t.name);
}

inline Constraint constraint_for(SolveMode m) { return m == SolveMode::two_constraint ? Constraint::two : Constraint::joint; }

}  // namespace detail

using InitSpec = std::variant<InitPreset, FieldPair>;

// Least-energy positive pair on the ball. With an automatic preset and beta < 0
// both disjoint-bump basins are tried and the lower converged energy is kept.
inline CoupledResult solve_coupled(const SystemParams& P, GridPtr g, SolveMode mode, const InitSpec& init = InitPreset::automatic,
                                   const SolverOptions& opt = {}) {
  P.validate();
  if (P.beta == 0.0) throw DomainError("solve_coupled: beta != 0 required");
  EnergyReport rep = detail::base_report(P, g, opt);
  detail::check_admissible(P.lambda1, rep.lambda1_omega, "lambda1");
  detail::check_admissible(P.lambda2, rep.lambda1_omega, "lambda2");
  rep.mode = to_string(mode);
  const double q = P.p();
  const detail::Engine eng{P, detail::constraint_for(mode), q, opt};

  std::vector<std::pair<std::string, FieldPair>> starts;
  if (const auto* fp = std::get_if<FieldPair>(&init)) {
    starts.emplace_back("custom", *fp);
  } else {
    InitPreset pr = std::get<InitPreset>(init);
    if (pr == InitPreset::automatic) {
      if (P.beta > 0.0) {
        starts.emplace_back(to_string(InitPreset::instanton_pair), preset_pair(P, g, InitPreset::instanton_pair));
      } else {
        starts.emplace_back(to_string(InitPreset::disjoint_bumps), preset_pair(P, g, InitPreset::disjoint_bumps));
        starts.emplace_back(to_string(InitPreset::disjoint_bumps_swapped), preset_pair(P, g, InitPreset::disjoint_bumps_swapped));
      }
    } else {
      starts.emplace_back(to_string(pr), preset_pair(P, g, pr));
    }
  }

  std::optional<FieldPair> best;
  SolveStats best_st;
  for (auto& [name, w] : starts) {
    BasinRecord b;
    b.preset = name;
    try {
      const auto st = eng.run(w);
      b.resolved = resolved(w.u) && resolved(w.v);
      b.converged = st.converged && b.resolved;
      b.energy = st.energy;
      b.residual = st.residual;
      b.iterations = st.iterations;
      if (b.converged && (!best || st.energy < best_st.energy)) {
        best = w;
        best_st = st;
        rep.basin = name;
      }
    } catch (const Error& e) {
      b.converged = false;
    }
    rep.basins.push_back(b);
  }
  if (!best) {
    const auto& b = rep.basins.front();
    throw ConvergenceError("solve_coupled: no basin converged (first residual " + std::to_string(b.residual) +
                               (b.resolved ? ")" : ", concentration below grid resolution)"),
                           b.iterations, b.residual);
  }
  detail::finish_report(P, *best, best_st, rep, q);
  refresh(P, *best, q);
  return {*best, rep};
}

// Warm-started chain over a decreasing eps schedule with exponent q = p - eps.
using StageCallback = std::function<void(double eps, const FieldPair&, const SolveStats&)>;

inline CoupledResult solve_subcritical(const SystemParams& P, GridPtr g, const std::vector<double>& eps_schedule,
                                       const SolverOptions& opt = {}, SolveMode mode = SolveMode::mountain_pass,
                                       const StageCallback& on_stage = {}) {
  P.validate();
  if (eps_schedule.empty()) throw DomainError("solve_subcritical: empty schedule");
  for (std::size_t i = 0; i < eps_schedule.size(); ++i) {
    const double e = eps_schedule[i];
    if (!(e > 0.0 && e < P.p() - 1.0)) throw DomainError("solve_subcritical: need 0 < eps < p - 1");
    if (i > 0 && !(e < eps_schedule[i - 1])) throw DomainError("solve_subcritical: schedule must decrease");
  }
  EnergyReport rep = detail::base_report(P, g, opt);
  detail::check_admissible(P.lambda1, rep.lambda1_omega, "lambda1");
  detail::check_admissible(P.lambda2, rep.lambda1_omega, "lambda2");
  rep.mode = std::string("subcritical/") + to_string(mode);
  FieldPair w = preset_pair(P, g, P.beta > 0.0 ? InitPreset::instanton_pair : InitPreset::disjoint_bumps);
  rep.basin = P.beta > 0.0 ? "instanton_pair" : "disjoint_bumps";
  SolveStats st;
  double q = P.p();
  int total = 0;
  for (double e : eps_schedule) {
    q = P.p() - e;
    const detail::Engine eng{P, detail::constraint_for(mode), q, opt};
    st = eng.run(w);
    total += st.iterations;
    if (!st.converged)
      throw ConvergenceError("solve_subcritical: eps = " + std::to_string(e) + " did not converge", st.iterations, st.residual);
    rep.eps_energies.emplace_back(e, st.energy);
    if (on_stage) on_stage(e, w, st);
  }
  st.iterations = total;
  detail::finish_report(P, w, st, rep, q);
  refresh(P, w, q);
  return {w, rep};
}

}  // namespace critsys
