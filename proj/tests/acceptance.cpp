// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "critsys/checks.hpp"
#include "critsys/coupling.hpp"
#include "critsys/experiments.hpp"
#include "critsys/functional.hpp"
#include "critsys/instanton.hpp"
#include "critsys/solver.hpp"

using namespace critsys;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool passed = false;
  std::string detail;
};

char buf[512];

template <class... A>
std::string format(const char* f, A... a) {
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

// 1. symmetric coupling closed form over N 5..8 and 20 seeded (mu, beta) pairs
Outcome symmetric_closed_form() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<std::pair<double, double>> pairs;
  for (int i = 0; i < 20; ++i) pairs.emplace_back(std::pow(10.0, 2.0 * U(rng) - 1.0), std::pow(10.0, 4.0 * U(rng) - 2.0));
  int bad = 0, bad_above = 0, total = 0;
  double worst = 0.0, slowest = 0.0;
  std::string first_bad;
  for (int N = 5; N <= 8; ++N)
    for (const auto& [mu, beta] : pairs) {
      const SystemParams P{N, mu, mu, beta, -1.0, -1.0};
      const auto t0 = Clock::now();
      const auto s = solve_k0_l0(P);
      slowest = std::max(slowest, seconds_since(t0));
      const double exact = pow_pos(mu + beta, -P.inv_pm1());
      const double err = std::max(std::abs(s.k - exact), std::abs(s.l - exact));
      ++total;
      if (err > 1e-10) {
        ++bad;
        bad_above += beta >= P.beta_uniqueness_floor();
        if (first_bad.empty()) first_bad = format(" first: N=%d mu=%.4g beta=%.4g k0=%.6g vs %.6g", N, mu, beta, s.k, exact);
      } else {
        worst = std::max(worst, err);
      }
    }
  return {bad == 0 && slowest < 0.1,
          format("%d/%d cases off the symmetric line (%d with beta >= (p-1)mu); worst matching error %.2e; slowest %.3f s", bad,
                 total, bad_above, worst, slowest) +
              first_bad};
}

// 2. beta0 exact for equal mu; target equation otherwise
Outcome beta0_exactness() {
  double eq = 0.0, asym = 0.0;
  std::mt19937_64 rng(102);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int N = 5; N <= 8; ++N)
    for (int t = 0; t < 10; ++t) {
      const double mu = std::pow(10.0, U(rng));
      const SystemParams P{N, mu, mu, 1.0, -1.0, -1.0};
      eq = std::max(eq, std::abs(solve_beta0(P) - (P.p() - 1.0) * mu));
      const SystemParams Q{N, mu, std::pow(10.0, U(rng)), 1.0, -1.0, -1.0};
      const double b0 = solve_beta0(Q);
      asym = std::max(asym, std::abs(g_of_beta(Q, b0) - beta0_target(Q)));
    }
  return {eq == 0.0 && asym <= 1e-10, format("equal-mu max deviation %.2e, asymmetric g(beta0) residual %.2e", eq, asym)};
}

// 3. Jacobian determinant sign and closed form, 50 tuples
Outcome jacobian_determinant() {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double rel = 0.0, max_det = -1e300, max_pmuk = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int N = 5 + static_cast<int>(4 * U(rng));
    SystemParams P{N, std::pow(10.0, U(rng) - 0.5), std::pow(10.0, U(rng) - 0.5), 0.0, -1.0, -1.0};
    P.beta = solve_beta0(P) * (1.0 + std::pow(10.0, 3.0 * U(rng) - 2.0));
    const auto s = solve_k0_l0(P);
    const auto J = jacobian_at(P, s);
    rel = std::max(rel, std::abs(J.det - J.det_closed_form) / std::abs(J.det_closed_form));
    max_det = std::max(max_det, J.det);
    max_pmuk = std::max({max_pmuk, P.p() * P.mu1 * pow_pos(s.k, P.p() - 1.0), P.p() * P.mu2 * pow_pos(s.l, P.p() - 1.0)});
  }
  return {rel <= 1e-8 && max_det < 0.0 && max_pmuk < 1.0,
          format("closed-form relative error %.2e, max det %.3e, max p mu k^{p-1} %.6f", rel, max_det, max_pmuk)};
}

// 4. instanton identity and scale invariance
Outcome instanton_identity() {
  const auto t0 = Clock::now();
  double id = 0.0, inv = 0.0;
  for (int N = 5; N <= 8; ++N) {
    const auto a = compute_S(N);
    id = std::max(id, std::abs(a.integral_grad - a.integral_crit) / a.S_pow());
    for (double eps : {0.01, 0.37, 20.0}) {
      SobolevOptions o;
      o.epsilon = eps;
      inv = std::max(inv, std::abs(compute_S(N, o).S - a.S) / a.S);
    }
  }
  const double t = seconds_since(t0);
  return {id < 1e-6 && inv < 1e-6 && t < 1.0, format("identity %.2e, eps invariance %.2e, %.3f s", id, inv, t)};
}

// 5. scalar bounds and mu scaling on 2048 intervals
Outcome scalar_bounds() {
  bool ok = true;
  std::string d;
  for (int N : {5, 6}) {
    const auto g = make_grid(N, 1.0, 2048);
    const double l1 = first_eigenvalue(*g);
    const double SN = compute_S(N).S_pow();
    const SystemParams P{N, 1.0, 2.0, -1.0, -0.3 * l1, -0.3 * l1};
    double slowest = 0.0, B[2];
    for (int which : {1, 2}) {
      const auto t0 = Clock::now();
      B[which - 1] = scalar_ground_state(P, which, g).B;
      slowest = std::max(slowest, seconds_since(t0));
    }
    double up_margin = 1e300, lo_margin = 1e300;
    for (int i = 0; i < 2; ++i) {
      const double scale = pow_pos(i == 0 ? 1.0 : 2.0, -P.inv_pm1());
      const double up = scale * SN / N;
      const double lo = std::pow(1.0 - 0.3, 0.5 * N) * up;
      up_margin = std::min(up_margin, up - B[i]);
      lo_margin = std::min(lo_margin, B[i] - lo);
    }
    const double scaling = std::abs(B[1] - pow_pos(2.0, -P.inv_pm1()) * B[0]) / B[0];
    ok = ok && up_margin > 0.0 && lo_margin > 0.0 && scaling <= 1e-4 && slowest < 30.0;
    d += format("N=%d: upper margin %.4g, lower margin %.4g, scaling %.2e, slowest %.1f s; ", N, up_margin, lo_margin, scaling, slowest);
  }
  return {ok, d};
}

// 6. symmetric classification, N = 6, beta = 1
Outcome symmetric_classification() {
  const auto t0 = Clock::now();
  const auto g = make_grid(6, 1.0, 1024);
  const double l1 = first_eigenvalue(*g);
  const SystemParams P{6, 1.0, 1.0, 1.0, -0.3 * l1, -0.3 * l1};
  const auto r = solve_coupled(P, g, SolveMode::two_constraint);
  const auto s = solve_k0_l0(P);
  const double energy_dev = std::abs(r.report.B - (s.k + s.l) * r.report.B_mu1) / r.report.B;
  const double t = seconds_since(t0);
  return {r.report.ratio_deviation < 1e-2 && energy_dev < 1e-2 && t < 120.0,
          format("ratio deviation %.2e, energy vs (k0+l0)B1 %.2e, beta0 %.3f, %.1f s", r.report.ratio_deviation, energy_dev,
                 solve_beta0(P), t)};
}

// 7. threshold suite over N x mu ratio x beta
Outcome threshold_suite() {
  int solved = 0, failed_thresholds = 0, errors = 0;
  double worst = 1e300;
  std::string d;
  for (int N : {5, 6}) {
    const auto g = make_grid(N, 1.0, 1024);
    const double frac = N == 5 ? 0.95 : 0.9;
    const double l1 = first_eigenvalue(*g);
    for (double mu2 : {1.0, 2.0})
      for (double beta : {-10.0, -1.0, 2.0}) {
        const SystemParams P{N, 1.0, mu2, beta, -frac * l1, -frac * l1};
        try {
          const auto r = solve_coupled(P, g, SolveMode::two_constraint);
          ++solved;
          for (const auto& c : threshold_report(P, r.report)) {
            worst = std::min(worst, c.margin);
            if (!c.passed) {
              ++failed_thresholds;
              d += format("[N=%d mu2=%g beta=%g: %s margin %.4g] ", N, mu2, beta, c.name.c_str(), c.margin);
            }
          }
        } catch (const Error& e) {
          ++errors;
          d += format("[N=%d mu2=%g beta=%g: %s] ", N, mu2, beta, e.what());
        }
      }
  }
  return {errors == 0 && failed_thresholds == 0,
          format("%d/12 solved, %d threshold violations, smallest margin %.4g ", solved, failed_thresholds, worst) + d};
}

// 8. phase separation sweep
Outcome phase_separation() {
  const auto t0 = Clock::now();
  const auto g = make_grid(6, 1.0, 1024);
  const double l1 = first_eigenvalue(*g);
  const SystemParams P{6, 1.0, 1.0, -1.0, -0.9 * l1, -0.9 * l1};
  SolverOptions opt;
  const auto sw = beta_sweep(P, g, {-1.0, -10.0, -100.0, -1000.0, -10000.0}, opt);
  SystemParams Pf = P;
  Pf.beta = -10000.0;
  const auto sc = sign_changing_check(Pf, sw.final_pair, sw.final_report);
  const double t = seconds_since(t0);
  const bool tail = sw.tail_ratio < 0.1;
  const bool disjoint = sc.disjoint_fraction >= 0.95;
  const bool residual = sc.residual < 10.0 * opt.tol;
  const bool bound = sc.J_margin > 0.0;
  return {tail && disjoint && residual && bound && t < 900.0,
          format("tail ratio %.4g %s, disjoint %.3f %s, sign-changing residual %.4g (limit %.1e) %s, dual residual %.4g, "
                 "J(w) margin %.4g %s, %.1f s",
                 sw.tail_ratio, tail ? "ok" : "FAIL", sc.disjoint_fraction, disjoint ? "ok" : "FAIL", sc.residual, 10.0 * opt.tol,
                 residual ? "ok" : "FAIL", sc.dual_residual, sc.J_margin, bound ? "ok" : "FAIL", t)};
}

// 9. small-ball deficit law, N = 6
Outcome small_ball() {
  const auto t0 = Clock::now();
  const double l1 = first_eigenvalue(*make_grid(6, 1.0, 1024));
  const SystemParams P{6, 1.0, 1.0, -1.0, -0.9 * l1, -0.9 * l1};
  SmallBallOptions so;
  so.jobs = static_cast<int>(std::max(1u, std::min(4u, std::thread::hardware_concurrency())));
  const auto rep = small_ball_law(P, {0.3, 0.2, 0.15, 0.1, 0.07, 0.05}, so);
  int converged = 0;
  for (const auto& p : rep.points) converged += p.converged;
  const double t = seconds_since(t0);
  return {rep.slope >= 3.7 && rep.slope <= 4.3 && rep.fitted >= 6 && rep.all_deficits_positive && t < 600.0,
          format("slope %.4f (predicted %.1f), %d converged, %d fitted, deficits positive %s, C in [%.4g, %.4g], %.1f s", rep.slope,
                 rep.predicted_exponent, converged, rep.fitted, rep.all_deficits_positive ? "yes" : "no", rep.C2_hat, rep.C1_hat, t)};
}

// 10. gradient and integration-by-parts hygiene
Outcome hygiene() {
  const auto all = full_checks(1);
  double fd = -1.0, order = -1.0;
  for (const auto& c : all) {
    if (c.name == "gradient vs finite differences") fd = c.value;
    if (c.name == "integration by parts order") order = c.value;
  }
  return {fd >= 0.0 && fd <= 1e-6 && order >= 1.9, format("gradient FD relative error %.2e, IBP order %.4f", fd, order)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"coupling closed form", symmetric_closed_form}, {"beta0 exactness", beta0_exactness},
      {"jacobian determinant", jacobian_determinant},  {"instanton identity", instanton_identity},
      {"scalar bounds", scalar_bounds},                {"symmetric classification", symmetric_classification},
      {"threshold suite", threshold_suite},            {"phase separation", phase_separation},
      {"small-ball law", small_ball},                  {"numerics hygiene", hygiene}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.passed;
    std::printf("criterion %2zu %-26s %s  %s\n", i + 1, criteria[i].first, o.passed ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
