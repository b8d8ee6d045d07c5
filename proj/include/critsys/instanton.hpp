#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "critsys/coupling.hpp"
#include "critsys/errors.hpp"
#include "critsys/params.hpp"
#include "critsys/radial.hpp"

namespace critsys {

// U_{eps,y}(x) = [N(N-2)]^{(N-2)/4} (eps/(eps^2+|x-y|^2))^{(N-2)/2}
struct Instanton {
  int N = 5;
  double epsilon = 1.0;
  std::vector<double> center;  // empty means the origin

  double amplitude() const { return std::pow(N * (N - 2.0), 0.25 * (N - 2)); }

  double at_radius(double r) const {
    return amplitude() * std::pow(epsilon / (epsilon * epsilon + r * r), 0.5 * (N - 2));
  }
  // dU/dr
  double derivative(double r) const { return -(N - 2.0) * r / (epsilon * epsilon + r * r) * at_radius(r); }
  // Delta U = -U^{2*-1}
  double laplacian(double r) const { return -std::pow(at_radius(r), (N + 2.0) / (N - 2.0)); }
};

inline double evaluate(const Instanton& inst, std::span<const double> x) {
  if (!(inst.epsilon > 0.0)) throw DomainError("Instanton: epsilon > 0 required");
  if (static_cast<int>(x.size()) != inst.N) throw DomainError("Instanton: point has wrong dimension");
  double r2 = 0.0;
  for (int i = 0; i < inst.N; ++i) {
    const double y = inst.center.empty() ? 0.0 : inst.center[i];
    r2 += (x[i] - y) * (x[i] - y);
  }
  return inst.at_radius(std::sqrt(r2));
}

struct SobolevData {
  int N = 5;
  double S = 0.0;
  double integral_grad = 0.0;  // \int |grad U|^2
  double integral_crit = 0.0;  // \int U^{2*}
  double tail_estimate = 0.0;  // relative size of the analytic tail beyond R_max
  bool tail_warning = false;

  double S_pow() const { return std::pow(S, 0.5 * N); }  // S^{N/2}
};

namespace detail {

struct InstantonIntegrals {
  double grad, crit, tail_grad, tail_crit;
};

// Trapezoid on the grid plus the leading-order analytic tail beyond its radius.
inline InstantonIntegrals instanton_integrals(const Instanton& U, const RadialGrid& g) {
  const int N = U.N;
  const double two_star = 2.0 * N / (N - 2.0);
  std::vector<double> fg(g.size()), fc(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = g.r(static_cast<int>(i));
    fg[i] = U.derivative(r) * U.derivative(r);
    fc[i] = std::pow(U.at_radius(r), two_star);
  }
  const double R = g.radius();
  const double c = U.amplitude() * std::pow(U.epsilon, 0.5 * (N - 2));  // U ~ c r^{2-N}
  const double tail_crit = g.sigma() * std::pow(c, two_star) * std::pow(R, -N) / N;
  const double tail_grad = g.sigma() * (N - 2.0) * c * c * std::pow(R, 2.0 - N);
  return {integrate(g, fg), integrate(g, fc), tail_grad, tail_crit};
}

}  // namespace detail

// Both Sobolev integrals of U_{eps,0} on a supplied grid (tail-corrected, no extrapolation).
inline SobolevData compute_S(int N, const RadialGrid& g, double eps = 1.0) {
  const Instanton U{N, eps, {}};
  const auto I = detail::instanton_integrals(U, g);
  SobolevData d;
  d.N = N;
  d.integral_grad = I.grad + I.tail_grad;
  d.integral_crit = I.crit + I.tail_crit;
  d.S = std::pow(0.5 * (d.integral_grad + d.integral_crit), 2.0 / N);
  d.tail_estimate = std::max(I.tail_grad / d.integral_grad, I.tail_crit / d.integral_crit);
  d.tail_warning = d.tail_estimate > 1e-8;
  return d;
}

struct SobolevOptions {
  double epsilon = 1.0;
  double rmax_over_eps = 1e3;
  int intervals = 4000;
  double grading = 3.0;
};

// Graded-grid trapezoid at M and 2M intervals, Richardson-extrapolated.
inline SobolevData compute_S(int N, const SobolevOptions& opt = {}) {
  if (N < 3) throw DomainError("compute_S: N >= 3 required");
  const double R = opt.rmax_over_eps * opt.epsilon;
  const RadialGrid g1(N, R, opt.intervals, Grading::power(opt.grading));
  const RadialGrid g2(N, R, 2 * opt.intervals, Grading::power(opt.grading));
  const auto a = compute_S(N, g1, opt.epsilon);
  const auto b = compute_S(N, g2, opt.epsilon);
  SobolevData d = b;
  d.integral_grad = (4.0 * b.integral_grad - a.integral_grad) / 3.0;
  d.integral_crit = (4.0 * b.integral_crit - a.integral_crit) / 3.0;
  d.S = std::pow(0.5 * (d.integral_grad + d.integral_crit), 2.0 / N);
  return d;
}

// A = (1/N)(mu1^{-(N-2)/2} + mu2^{-(N-2)/2}) S^{N/2} for beta < 0,
// A = (1/N)(k0 + l0) S^{N/2} for beta >= (p-1) max(mu).
inline double limit_energy_A(const SystemParams& P, const SobolevData& sd,
                             const std::optional<CouplingSolution>& coupling = std::nullopt) {
  P.validate();
  const double SN = sd.S_pow();
  if (P.beta < 0.0) return (pow_pos(P.mu1, -P.inv_pm1()) + pow_pos(P.mu2, -P.inv_pm1())) * SN / P.N;
  if (P.beta >= P.beta_uniqueness_floor()) {
    const CouplingSolution s = coupling ? *coupling : solve_k0_l0(P);
    return (s.k + s.l) * SN / P.N;
  }
  throw NoClosedFormError("limit_energy_A: no closed form for 0 <= beta < (p-1) max(mu); use a large-ball solve");
}

}  // namespace critsys
