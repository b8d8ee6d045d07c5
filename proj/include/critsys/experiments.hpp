#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "critsys/errors.hpp"
#include "critsys/functional.hpp"
#include "critsys/instanton.hpp"
#include "critsys/radial.hpp"
#include "critsys/solver.hpp"

namespace critsys {

// Solver failure inside a sweep, tagged with the coupling where it happened.
class SweepError : public Error {
 public:
  SweepError(const std::string& what, double beta) : Error(what + " (beta = " + std::to_string(beta) + ")"), beta_(beta) {}
  double beta() const { return beta_; }

 private:
  double beta_;
};

struct SweepResult {
  double beta = 0.0;
  double B_beta = 0.0;
  double overlap = 0.0;       // \int u^p v^p
  double beta_overlap = 0.0;  // |beta| overlap
  double support_radius_u = 0.0;
  double support_radius_v = 0.0;
  double sign_changing_residual = 0.0;
  double residual = 0.0;
  int iterations = 0;
  std::string basin;
  bool basin_switch = false;  // the cold restart beat the warm chain
};

struct SweepOptions {
  int substeps_per_decade = 4;
  bool cold_restarts = true;
  double support_threshold = 1e-3;
};

struct SweepOutput {
  std::vector<SweepResult> points;
  FieldPair final_pair;
  EnergyReport final_report;
  double tail_ratio = 0.0;  // |beta overlap| last / first
  bool tail_decreasing = false;
};

inline double overlap_integral(const FieldPair& w, double q) {
  std::vector<double> f(w.u.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = pow_abs(w.u[i], q) * pow_abs(w.v[i], q);
  return integrate(w.grid(), f);
}

// Edge of the numerical support of x facing the partner y: starting at the peak
// of x, walk towards the peak of y until x drops below thr * max x.
inline double support_radius(const RadialField& x, const RadialField& y, double thr = 1e-3) {
  const auto& g = x.grid();
  const int M = g.intervals();
  auto argmax = [&](const RadialField& f) {
    int k = 0;
    for (int i = 0; i < M; ++i)
      if (std::abs(f[i]) > std::abs(f[k])) k = i;
    return k;
  };
  const double mx = x.max_abs();
  if (mx == 0.0) return 0.0;
  const int px = argmax(x), py = argmax(y);
  const int step = py >= px ? 1 : -1;
  int i = px;
  while (i + step >= 0 && i + step <= M && std::abs(x[i + step]) >= thr * mx) i += step;
  return g.r(i);
}

// Fraction of interior nodes where min(u, v) < thr * max(|u|, |v|).
inline double disjoint_fraction(const FieldPair& w, double thr = 1e-3) {
  const double amp = std::max(w.u.max_abs(), w.v.max_abs());
  const int M = w.grid().intervals();
  int n = 0;
  for (int i = 0; i < M; ++i) n += std::min(std::abs(w.u[i]), std::abs(w.v[i])) < thr * amp;
  return static_cast<double>(n) / M;
}

struct SignChangeReport {
  double residual = 0.0;       // discrete L^2 residual of the sign-changing equation at w = u - v
  double dual_residual = 0.0;  // same residual in the discrete H^{-1} norm
  double J_w = 0.0;
  double J_bound = 0.0;
  double J_margin = 0.0;
  double positive_part_error = 0.0;  // max |w^+ - u| + max |w^- - v|
  double disjoint_fraction = 0.0;
  double consistency_constant = 0.0;  // residual / (|beta| overlap + solver residual)
  bool unverified_regime = false;     // N = 5: limit behaviour open
};

// -Delta w + lambda1 w^+ - lambda2 w^- = mu1 (w^+)^{2*-1} - mu2 (w^-)^{2*-1}
// evaluated at w = u - v, with its energy J(w) against the mixed level.
inline SignChangeReport sign_changing_check(const SystemParams& P, const FieldPair& w, const EnergyReport& rep) {
  const auto& g = w.grid();
  const int M = g.intervals();
  const double q = P.p();
  const auto W = g.cell_volumes();
  const auto m = g.trapezoid_weights();
  std::vector<double> d(g.size(), 0.0), wp(g.size(), 0.0), wm(g.size(), 0.0);
  SignChangeReport out;
  for (int i = 0; i < M; ++i) {
    d[i] = w.u[i] - w.v[i];
    wp[i] = std::max(d[i], 0.0);
    wm[i] = std::max(-d[i], 0.0);
    out.positive_part_error = std::max(out.positive_part_error, std::abs(wp[i] - w.u[i]) + std::abs(wm[i] - w.v[i]));
  }
  const auto Kd = stiffness_apply(g, d);
  std::vector<double> F(M), Fg(M);
  double s = 0.0, Jq = dirichlet_form(g, d, d), Jm = 0.0;
  for (int i = 0; i < M; ++i) {
    const double a = std::pow(wp[i], 2.0 * q - 1.0), b = std::pow(wm[i], 2.0 * q - 1.0);
    F[i] = Kd[i] + m[i] * (P.lambda1 * wp[i] - P.lambda2 * wm[i] - P.mu1 * a + P.mu2 * b);
    s += F[i] * F[i] / W[i];
    Jq += m[i] * (P.lambda1 * wp[i] * wp[i] + P.lambda2 * wm[i] * wm[i]);
    Jm += m[i] * (P.mu1 * a * wp[i] + P.mu2 * b * wm[i]);
  }
  out.residual = std::sqrt(s);
  const auto z = shifted_stiffness(g, 0.0).solve(F);
  double dual = 0.0;
  for (int i = 0; i < M; ++i) dual += F[i] * z[i];
  out.dual_residual = std::sqrt(std::max(dual, 0.0));
  out.J_w = 0.5 * Jq - Jm / (2.0 * q);
  const double SN = std::pow(rep.S, 0.5 * P.N);
  out.J_bound = std::min(rep.B_mu1 + pow_pos(P.mu2, -P.inv_pm1()) * SN / P.N, rep.B_mu2 + pow_pos(P.mu1, -P.inv_pm1()) * SN / P.N);
  out.J_margin = out.J_bound - out.J_w;
  out.disjoint_fraction = disjoint_fraction(w);
  const double denom = std::abs(P.beta) * overlap_integral(w, q) + rep.residual_norm;
  out.consistency_constant = denom > 0.0 ? out.residual / denom : 0.0;
  out.unverified_regime = P.N == 5;
  return out;
}

namespace detail {

inline SweepResult sweep_point(const SystemParams& P, const CoupledResult& r, double thr) {
  SweepResult s;
  s.beta = P.beta;
  s.B_beta = r.report.B;
  s.overlap = overlap_integral(r.pair, P.p());
  s.beta_overlap = std::abs(P.beta) * s.overlap;
  s.support_radius_u = support_radius(r.pair.u, r.pair.v, thr);
  s.support_radius_v = support_radius(r.pair.v, r.pair.u, thr);
  s.sign_changing_residual = sign_changing_check(P, r.pair, r.report).residual;
  s.residual = r.report.residual_norm;
  s.iterations = r.report.iterations;
  s.basin = r.report.basin;
  return s;
}

}  // namespace detail

// beta -> -infinity along a warm-started chain with geometric substeps; at every
// listed beta a cold solve from the presets is also run and the lower energy kept.
inline SweepOutput beta_sweep(const SystemParams& P, GridPtr g, const std::vector<double>& betas, const SolverOptions& opt = {},
                              const SweepOptions& so = {}) {
  if (betas.empty()) throw DomainError("beta_sweep: empty beta list");
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] < 0.0)) throw DomainError("beta_sweep: all betas must be negative");
    if (i > 0 && !(betas[i] < betas[i - 1])) throw DomainError("beta_sweep: betas must strictly decrease");
  }
  SweepOutput out;
  std::optional<CoupledResult> prev;
  for (double target : betas) {
    SystemParams Pt = P;
    Pt.beta = target;
    std::optional<CoupledResult> warm;
    std::string warm_error;
    if (!prev) {
      try {
        warm = solve_coupled(Pt, g, SolveMode::two_constraint, InitPreset::automatic, opt);
      } catch (const Error& e) {
        throw SweepError(e.what(), target);
      }
    } else {
      const double from = out.points.back().beta;
      const int n = std::max(1, static_cast<int>(std::ceil(so.substeps_per_decade * std::log10(target / from) - 1e-9)));
      FieldPair w = prev->pair;
      try {
        for (int k = 1; k <= n; ++k) {
          SystemParams Pk = P;
          Pk.beta = k == n ? target : from * std::pow(target / from, static_cast<double>(k) / n);
          auto r = solve_coupled(Pk, g, SolveMode::two_constraint, w, opt);
          w = r.pair;
          if (k == n) warm = std::move(r);
        }
      } catch (const Error& e) {
        warm_error = e.what();
      }
    }
    bool switched = false;
    if (prev && so.cold_restarts) {
      try {
        auto cold = solve_coupled(Pt, g, SolveMode::two_constraint, InitPreset::automatic, opt);
        if (!warm || cold.report.B < warm->report.B - 1e-9 * std::abs(warm->report.B)) {
          switched = warm.has_value();
          warm = std::move(cold);
        }
      } catch (const Error& e) {
        if (!warm) throw SweepError("warm chain: " + warm_error + "; cold restart: " + e.what(), target);
      }
    }
    if (!warm) throw SweepError("warm chain: " + warm_error, target);
    auto pt = detail::sweep_point(Pt, *warm, so.support_threshold);
    pt.basin_switch = switched;
    if (prev) pt.basin = switched ? pt.basin + " (cold)" : "warm";
    out.points.push_back(pt);
    prev = std::move(warm);
  }
  out.final_pair = prev->pair;
  out.final_report = prev->report;
  const auto& pts = out.points;
  out.tail_ratio = pts.front().beta_overlap > 0.0 ? pts.back().beta_overlap / pts.front().beta_overlap : 0.0;
  out.tail_decreasing = pts.size() < 2 || pts.back().beta_overlap < pts[pts.size() - 2].beta_overlap;
  return out;
}

struct ThresholdCheck {
  std::string name;   // inequality being tested, "B < ..."
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
  bool passed = false;
};

// Every applicable comparison for the reported energy: the mixed scalar+bubble
// levels and A for beta < 0 (repeated as the beta-uniform bound when N >= 6),
// min(B_mu1, B_mu2, A) for beta > 0. Violations are reported, not thrown.
inline std::vector<ThresholdCheck> threshold_report(const SystemParams& P, const EnergyReport& rep) {
  std::vector<ThresholdCheck> out;
  auto add = [&](std::string name, double rhs) {
    out.push_back({std::move(name), rep.B, rhs, rhs - rep.B, rep.B < rhs});
  };
  const double SN = std::pow(rep.S, 0.5 * P.N);
  const double bubble1 = pow_pos(P.mu1, -P.inv_pm1()) * SN / P.N;
  const double bubble2 = pow_pos(P.mu2, -P.inv_pm1()) * SN / P.N;
  if (P.beta < 0.0) {
    add("B < B_mu1 + bubble_mu2", rep.B_mu1 + bubble2);
    add("B < B_mu2 + bubble_mu1", rep.B_mu2 + bubble1);
    if (rep.A) add("B < A", *rep.A);
    if (P.N >= 6) {
      add("sup_beta B < B_mu1 + bubble_mu2", rep.B_mu1 + bubble2);
      add("sup_beta B < B_mu2 + bubble_mu1", rep.B_mu2 + bubble1);
    }
  } else {
    add("B < B_mu1", rep.B_mu1);
    add("B < B_mu2", rep.B_mu2);
    if (rep.A) add("B < A", *rep.A);
  }
  return out;
}

inline bool all_passed(const std::vector<ThresholdCheck>& t) {
  return std::all_of(t.begin(), t.end(), [](const ThresholdCheck& c) { return c.passed; });
}

struct SmallBallOptions {
  int intervals = 2048;
  double grading = 3.0;
  bool richardson = true;  // second solve on half the intervals
  int fit_count = 6;
  double degenerate_tol = 1e-6;
  int jobs = 1;
  SolverOptions solver{};
};

struct SmallBallPoint {
  double R = 0.0;
  double J = 0.0;  // extrapolated J_R(U_R)
  double J_fine = 0.0;
  double J_coarse = 0.0;
  double deficit = 0.0;
  bool converged = false;
  bool fitted = false;
  std::string error;
};

struct SmallBallReport {
  int N = 0;
  double threshold = 0.0;  // (1/N) mu2^{-(N-2)/2} S^{N/2}
  double predicted_exponent = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double C1_hat = 0.0;  // max D/R^e over fitted radii
  double C2_hat = 0.0;  // min D/R^e over fitted radii
  int fitted = 0;
  bool all_deficits_positive = false;
  std::vector<SmallBallPoint> points;
};

// Scalar problem with (lambda2, mu2) on B(0, R): deficit of J_R(U_R) below the
// bubble level against R in log-log.
inline SmallBallReport small_ball_law(const SystemParams& P, const std::vector<double>& radii, const SmallBallOptions& so = {}) {
  P.validate();
  if (radii.empty()) throw DomainError("small_ball_law: empty radius list");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw DomainError("small_ball_law: radii must be positive");
    if (i > 0 && !(radii[i] < radii[i - 1])) throw DomainError("small_ball_law: radii must strictly decrease");
  }
  if (P.N == 4) throw DomainError("small_ball_law: exponent undefined for N = 4");
  SmallBallReport rep;
  rep.N = P.N;
  rep.predicted_exponent = (2.0 * P.N - 4.0) / (P.N - 4.0);
  rep.threshold = pow_pos(P.mu2, -P.inv_pm1()) * compute_S(P.N).S_pow() / P.N;
  const Grading gr = so.grading > 1.0 ? Grading::power(so.grading) : Grading::uniform();

  auto run = [&](double R) {
    SmallBallPoint pt;
    pt.R = R;
    try {
      pt.J_fine = scalar_ground_state(P, 2, make_grid(P.N, R, so.intervals, gr), so.solver).B;
      pt.J = pt.J_fine;
      if (so.richardson) {
        pt.J_coarse = scalar_ground_state(P, 2, make_grid(P.N, R, so.intervals / 2, gr), so.solver).B;
        pt.J = (4.0 * pt.J_fine - pt.J_coarse) / 3.0;
      }
      pt.deficit = rep.threshold - pt.J;
      pt.converged = true;
    } catch (const Error& e) {
      pt.error = e.what();
    }
    return pt;
  };
  rep.points.resize(radii.size());
  const std::size_t jobs = std::max(1, so.jobs);
  for (std::size_t start = 0; start < radii.size(); start += jobs) {
    std::vector<std::future<SmallBallPoint>> fut;
    for (std::size_t i = start; i < std::min(radii.size(), start + jobs); ++i)
      fut.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, run, radii[i]));
    for (std::size_t k = 0; k < fut.size(); ++k) rep.points[start + k] = fut[k].get();
  }

  rep.all_deficits_positive = true;
  std::vector<std::size_t> idx;
  for (std::size_t i = rep.points.size(); i-- > 0;) {
    const auto& pt = rep.points[i];
    if (!pt.converged) continue;
    if (!(pt.deficit > 0.0)) rep.all_deficits_positive = false;
    if (pt.deficit > so.degenerate_tol && static_cast<int>(idx.size()) < so.fit_count) idx.push_back(i);
  }
  if (idx.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(idx.size());
    for (auto i : idx) {
      const double x = std::log(rep.points[i].R), y = std::log(rep.points[i].deficit);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      rep.points[i].fitted = true;
    }
    rep.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    rep.intercept = (sy - rep.slope * sx) / n;
    rep.C1_hat = 0.0;
    rep.C2_hat = std::numeric_limits<double>::infinity();
    for (auto i : idx) {
      const double c = rep.points[i].deficit / std::pow(rep.points[i].R, rep.predicted_exponent);
      rep.C1_hat = std::max(rep.C1_hat, c);
      rep.C2_hat = std::min(rep.C2_hat, c);
    }
  }
  rep.fitted = static_cast<int>(idx.size());
  return rep;
}

}  // namespace critsys
