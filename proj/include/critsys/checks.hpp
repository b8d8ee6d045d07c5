#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "critsys/coupling.hpp"
#include "critsys/experiments.hpp"
#include "critsys/functional.hpp"
#include "critsys/instanton.hpp"
#include "critsys/radial.hpp"
#include "critsys/solver.hpp"

namespace critsys {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;  // measured quantity
  double limit = 0.0;  // what it is compared with
  std::string detail;
};

namespace detail {

inline CheckResult check_le(std::string name, double value, double limit, std::string detail = {}) {
  return {std::move(name), value <= limit, value, limit, std::move(detail)};
}

inline CheckResult check_ge(std::string name, double value, double limit, std::string detail = {}) {
  return {std::move(name), value >= limit, value, limit, std::move(detail)};
}

template <class F>
void guarded(std::vector<CheckResult>& out, const std::string& name, F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    out.push_back({name, false, 0.0, 0.0, std::string("threw: ") + e.what()});
  }
}

}  // namespace detail

// Coupling-algebra invariants only; a few hundred milliseconds.
inline std::vector<CheckResult> quick_checks() {
  using detail::check_le;
  std::vector<CheckResult> out;
  detail::guarded(out, "symmetric closed form k0 = l0", [&] {
    double worst = 0.0;
    for (int N : {5, 6, 7, 8})
      for (double mu : {0.5, 1.0, 3.0})
        for (double over : {0.01, 0.5, 10.0}) {
          // the minimal root sits on the symmetric line only from (p-1) mu on
          SystemParams P{N, mu, mu, 0.0, -1.0, -1.0};
          P.beta = P.beta_uniqueness_floor() + over;
          const auto s = solve_k0_l0(P);
          const double exact = pow_pos(mu + P.beta, -P.inv_pm1());
          worst = std::max({worst, std::abs(s.k - exact), std::abs(s.l - exact)});
        }
    out.push_back(check_le("symmetric closed form k0 = l0", worst, 1e-10));
  });
  detail::guarded(out, "beta0 equal mu", [&] {
    double worst = 0.0;
    for (int N : {5, 6, 7, 8})
      for (double mu : {0.5, 1.0, 2.0}) {
        const SystemParams P{N, mu, mu, 1.0, -1.0, -1.0};
        worst = std::max(worst, std::abs(solve_beta0(P) - (P.p() - 1.0) * mu));
      }
    out.push_back(check_le("beta0 equal mu", worst, 1e-12));
  });
  detail::guarded(out, "beta0 target equation", [&] {
    double worst = 0.0;
    for (int N : {5, 6, 8})
      for (double mu2 : {1.5, 4.0}) {
        const SystemParams P{N, 1.0, mu2, 1.0, -1.0, -1.0};
        const double b0 = solve_beta0(P);
        worst = std::max(worst, std::abs(g_of_beta(P, b0) - beta0_target(P)));
      }
    out.push_back(check_le("beta0 target equation", worst, 1e-10));
  });
  detail::guarded(out, "jacobian determinant", [&] {
    double worst = 0.0, max_det = -1e300, max_pmuk = 0.0;
    for (int N : {5, 6, 7})
      for (double mu2 : {1.0, 2.0}) {
        SystemParams P{N, 1.0, mu2, 0.0, -1.0, -1.0};
        P.beta = 1.5 * solve_beta0(P) + 0.1;
        const auto s = solve_k0_l0(P);
        const auto J = jacobian_at(P, s);
        worst = std::max(worst, std::abs(J.det - J.det_closed_form) / std::abs(J.det_closed_form));
        max_det = std::max(max_det, J.det);
        max_pmuk = std::max({max_pmuk, P.p() * P.mu1 * pow_pos(s.k, P.p() - 1.0), P.p() * P.mu2 * pow_pos(s.l, P.p() - 1.0)});
      }
    out.push_back(check_le("jacobian determinant closed form", worst, 1e-8));
    out.push_back(check_le("jacobian determinant negative", max_det, 0.0));
    out.push_back(check_le("p mu_i k0^{p-1} < 1", max_pmuk, 1.0 - 1e-14));
  });
  detail::guarded(out, "region uniqueness", [&] {
    const SystemParams P{6, 1.0, 2.0, 3.0, -1.0, -1.0};
    const auto u = check_region_uniqueness(P, solve_k0_l0(P), 20000);
    out.push_back({"region uniqueness", u.passed && u.sum_bound_ok, static_cast<double>(u.violations.size()), 0.0,
                   std::to_string(u.samples) + " samples"});
  });
  detail::guarded(out, "branch continuation residual", [&] {
    const SystemParams P{6, 1.0, 4.0, 0.0, -1.0, -1.0};
    double worst = 0.0;
    for (const auto& b : continue_branch(P, 0.1, 100)) worst = std::max(worst, b.sol.residual);
    out.push_back(check_le("branch continuation residual", worst, 1e-12));
  });
  return out;
}

// Full suite across all modules on small grids; roughly a minute.
inline std::vector<CheckResult> full_checks(std::uint64_t seed) {
  using detail::check_ge;
  using detail::check_le;
  auto out = quick_checks();
  detail::guarded(out, "first eigenvalue N=5", [&] {
    const double lam = first_eigenvalue(*make_grid(5, 1.0, 1024));
    const double exact = 4.4934094579090642 * 4.4934094579090642;
    out.push_back(check_le("first eigenvalue N=5", std::abs(lam - exact) / exact, 1e-5));
    const double l2 = first_eigenvalue(*make_grid(5, 2.0, 1024));
    out.push_back(check_le("eigenvalue scaling 1/R^2", std::abs(4.0 * l2 - lam) / lam, 1e-6));
  });
  detail::guarded(out, "integration by parts order", [&] {
    auto defect = [](int M) {
      const auto g = make_grid(6, 1.0, M);
      const auto u = RadialField::from_function(g, [](double r) { return std::cos(0.5 * std::numbers::pi * r) * (1.0 + r * r); });
      const auto L = laplacian(u);
      std::vector<double> f(g->size());
      for (std::size_t i = 0; i < f.size(); ++i) f[i] = -L[i] * u[i];
      return std::abs(integrate(*g, f) - dirichlet_form(u));
    };
    const double order = std::log2(defect(256) / defect(512));
    out.push_back(check_ge("integration by parts order", order, 1.9));
  });
  detail::guarded(out, "instanton identity", [&] {
    double worst = 0.0, inv = 0.0;
    for (int N : {5, 6, 7, 8}) {
      const auto a = compute_S(N);
      worst = std::max(worst, std::abs(a.integral_grad - a.integral_crit) / a.S_pow());
      SobolevOptions o;
      o.epsilon = 0.37;
      inv = std::max(inv, std::abs(compute_S(N, o).S - a.S) / a.S);
    }
    out.push_back(check_le("instanton gradient/critical identity", worst, 1e-6));
    out.push_back(check_le("instanton eps invariance", inv, 1e-6));
  });
  detail::guarded(out, "gradient vs finite differences", [&] {
    const auto g = make_grid(6, 1.0, 128);
    const double lam1 = first_eigenvalue(*g);
    const SystemParams P{6, 1.0, 2.0, -0.7, -0.3 * lam1, -0.5 * lam1};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.5, 1.5), D(-1.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      FieldPair w{RadialField::from_function(g, [&](double r) { return U(rng) * (1.0 - r * r); }),
                  RadialField::from_function(g, [&](double r) { return U(rng) * (1.0 - r); })};
      FieldPair d{RadialField::from_function(g, [&](double) { return D(rng); }),
                  RadialField::from_function(g, [&](double) { return D(rng); })};
      const auto G = gradient(P, w);
      const auto W = g->cell_volumes();
      double an = 0.0;
      for (int i = 0; i < g->intervals(); ++i) an += W[i] * (G.gu[i] * d.u[i] + G.gv[i] * d.v[i]);
      const double h = 1e-5;
      auto shifted = [&](double s) {
        FieldPair x = w;
        for (std::size_t i = 0; i < x.u.size(); ++i) {
          x.u[i] += s * d.u[i];
          x.v[i] += s * d.v[i];
        }
        x.u.enforce_boundary();
        x.v.enforce_boundary();
        return energy(P, x);
      };
      const double fd = (shifted(h) - shifted(-h)) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(an), 1e-300));
    }
    out.push_back(check_le("gradient vs finite differences", worst, 1e-6, "20 random directions"));
  });
  detail::guarded(out, "scalar ground state bounds", [&] {
    const auto g = make_grid(5, 1.0, 512);
    const double lam1 = first_eigenvalue(*g);
    const double S = compute_S(5).S;
    const SystemParams P{5, 1.0, 2.0, -1.0, -0.3 * lam1, -0.3 * lam1};
    const auto b1 = scalar_ground_state(P, 1, g);
    const auto b2 = scalar_ground_state(P, 2, g);
    const double up = std::pow(S, 2.5) / 5.0;
    const double lo = std::pow((lam1 + P.lambda1) / lam1, 2.5) * up;
    out.push_back(check_ge("scalar upper bound margin", up - b1.B, 0.0));
    out.push_back(check_ge("scalar lower bound margin", b1.B - lo, 0.0));
    out.push_back(check_le("scalar mu scaling", std::abs(b2.B - std::pow(2.0, -1.5) * b1.B) / b1.B, 1e-4));
  });
  detail::guarded(out, "symmetric coupled pair", [&] {
    const auto g = make_grid(6, 1.0, 512);
    const double lam1 = first_eigenvalue(*g);
    const SystemParams P{6, 1.0, 1.0, 1.0, -0.3 * lam1, -0.3 * lam1};
    const auto r = solve_coupled(P, g, SolveMode::two_constraint);
    const auto s = solve_k0_l0(P);
    out.push_back(check_le("symmetric ratio deviation", r.report.ratio_deviation, 1e-2));
    out.push_back(check_le("symmetric energy (k0+l0) B1", std::abs(r.report.B - (s.k + s.l) * r.report.B_mu1) / r.report.B, 1e-2));
    out.push_back(check_le("nehari energy identity", r.report.nehari_identity_gap / r.report.B, 1e-12));
  });
  detail::guarded(out, "repulsive thresholds", [&] {
    const auto g = make_grid(6, 1.0, 512);
    const double lam1 = first_eigenvalue(*g);
    const SystemParams P{6, 1.0, 1.0, -10.0, -0.9 * lam1, -0.9 * lam1};
    const auto r = solve_coupled(P, g, SolveMode::two_constraint);
    double worst = 1e300;
    for (const auto& t : threshold_report(P, r.report)) worst = std::min(worst, t.margin);
    out.push_back(check_ge("repulsive threshold margins", worst, 0.0));
  });
  return out;
}

}  // namespace critsys
