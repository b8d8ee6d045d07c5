#pragma once

#include <cmath>
#include <concepts>
#include <cstdio>
#include <memory>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "critsys/errors.hpp"
#include "critsys/params.hpp"

namespace critsys {

// sigma_{N-1} = 2 pi^{N/2} / Gamma(N/2)
inline double sphere_area(int N) { return 2.0 * std::pow(std::numbers::pi, 0.5 * N) / std::tgamma(0.5 * N); }

inline double unit_ball_volume(int N) { return sphere_area(N) / N; }

enum class GradingKind { uniform, power };

// r_i = R (i/M)^exponent for `power`; exponent 1 is uniform.
struct Grading {
  GradingKind kind = GradingKind::uniform;
  double exponent = 1.0;

  static Grading uniform() { return {}; }
  static Grading power(double q) { return {GradingKind::power, q}; }
};

// Nodes r_0 = 0 < ... < r_M = R on B(0,R) in R^N. The finite-volume weights
// below carry the sphere-area factor, so sums approximate integrals over the ball.
class RadialGrid {
 public:
  RadialGrid(int N, double R, int M, Grading g = {}) : N_(N), R_(R), M_(M), grading_(g) {
    if (N < 1) throw DomainError("RadialGrid: N >= 1 required");
    if (!(R > 0.0)) throw DomainError("RadialGrid: R > 0 required");
    if (M < 16) throw DomainError("RadialGrid: at least 16 intervals required");
    if (g.kind == GradingKind::power && !(g.exponent >= 1.0)) throw DomainError("RadialGrid: grading exponent >= 1 required");
    sigma_ = sphere_area(N);
    r_.resize(M + 1);
    for (int i = 0; i <= M; ++i) {
      const double s = static_cast<double>(i) / M;
      r_[i] = R * (g.kind == GradingKind::uniform ? s : std::pow(s, g.exponent));
    }
    r_[M] = R;
    face_.resize(M);
    vol_.resize(M + 1);
    trap_.assign(M + 1, 0.0);
    double prev = 0.0;  // r_{i-1/2}^N
    for (int i = 0; i < M; ++i) {
      const double h = r_[i + 1] - r_[i];
      const double rf = 0.5 * (r_[i] + r_[i + 1]);
      face_[i] = sigma_ * std::pow(rf, N - 1) / h;
      const double rfN = std::pow(rf, N);
      vol_[i] = sigma_ * (rfN - prev) / N;
      prev = rfN;
      const double w = 0.5 * h * sigma_;
      trap_[i] += w * std::pow(r_[i], N - 1);
      trap_[i + 1] += w * std::pow(r_[i + 1], N - 1);
    }
    vol_[M] = sigma_ * (std::pow(R, N) - prev) / N;
  }

  int dimension() const { return N_; }
  double radius() const { return R_; }
  int intervals() const { return M_; }
  std::size_t size() const { return r_.size(); }
  const Grading& grading() const { return grading_; }
  double sigma() const { return sigma_; }
  double r(int i) const { return r_[i]; }
  double h(int i) const { return r_[i + 1] - r_[i]; }
  double max_spacing() const {
    double m = 0.0;
    for (int i = 0; i < M_; ++i) m = std::max(m, h(i));
    return m;
  }

  std::span<const double> nodes() const { return r_; }
  // sigma r_{i+1/2}^{N-1} / h_i, i = 0..M-1
  std::span<const double> face_coefficients() const { return face_; }
  // sigma (r_{i+1/2}^N - r_{i-1/2}^N)/N, r_{-1/2} = 0, last cell is the half cell at R
  std::span<const double> cell_volumes() const { return vol_; }
  // composite trapezoid weights of sigma r^{N-1} dr
  std::span<const double> trapezoid_weights() const { return trap_; }

 private:
  int N_;
  double R_;
  int M_;
  Grading grading_;
  double sigma_ = 0.0;
  std::vector<double> r_, face_, vol_, trap_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

inline GridPtr make_grid(int N, double R, int M, Grading g = {}) { return std::make_shared<const RadialGrid>(N, R, M, g); }

// Nodal values on a grid; the value at r = R is pinned to 0.
class RadialField {
 public:
  RadialField() = default;
  explicit RadialField(GridPtr g) : grid_(std::move(g)), v_(grid_->size(), 0.0) {}
  RadialField(GridPtr g, std::vector<double> values) : grid_(std::move(g)), v_(std::move(values)) {
    if (v_.size() != grid_->size()) throw DomainError("RadialField: size mismatch");
    v_.back() = 0.0;
  }
  template <class F>
  static RadialField from_function(GridPtr g, F&& f) {
    RadialField out(g);
    for (int i = 0; i + 1 < static_cast<int>(out.v_.size()); ++i) out.v_[i] = f(g->r(i));
    return out;
  }

  const RadialGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::span<const double> values() const { return v_; }
  std::vector<double>& data() { return v_; }
  const std::vector<double>& data() const { return v_; }
  double operator[](std::size_t i) const { return v_[i]; }
  double& operator[](std::size_t i) { return v_[i]; }
  std::size_t size() const { return v_.size(); }
  void enforce_boundary() { v_.back() = 0.0; }
  double max_abs() const {
    double m = 0.0;
    for (double x : v_) m = std::max(m, std::abs(x));
    return m;
  }

 private:
  GridPtr grid_;
  std::vector<double> v_;
};

// -div(face flux) applied nodewise without the volume division: (K u)_i.
inline std::vector<double> stiffness_apply(const RadialGrid& g, std::span<const double> u) {
  const auto a = g.face_coefficients();
  const int M = g.intervals();
  std::vector<double> out(M + 1, 0.0);
  for (int i = 0; i < M; ++i) {
    const double left = i > 0 ? a[i - 1] * (u[i] - u[i - 1]) : 0.0;
    out[i] = left - a[i] * (u[i + 1] - u[i]);
  }
  return out;
}

// Finite-volume radial Laplacian; at r = 0 it equals the ghost-node form
// 2N (u_1 - u_0)/h^2, i.e. N u''(0). Zero at the boundary node.
inline RadialField laplacian(const RadialField& f) {
  const auto& g = f.grid();
  auto Ku = stiffness_apply(g, f.values());
  const auto W = g.cell_volumes();
  RadialField out(f.grid_ptr());
  for (int i = 0; i < g.intervals(); ++i) out[i] = -Ku[i] / W[i];
  return out;
}

// Trapezoid rule for the ball integral sigma \int_0^R f r^{N-1} dr.
inline double integrate(const RadialGrid& g, std::span<const double> f) {
  const auto w = g.trapezoid_weights();
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * f[i];
  return s;
}

template <class F>
  requires std::invocable<F, double>
inline double integrate(const RadialGrid& g, F&& f) {
  const auto w = g.trapezoid_weights();
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * f(g.r(static_cast<int>(i)));
  return s;
}

inline double integrate(const RadialField& f) { return integrate(f.grid(), f.values()); }

// Cell-volume (lumped) quadrature, the weight of the residual norm.
inline double integrate_lumped(const RadialGrid& g, std::span<const double> f) {
  const auto w = g.cell_volumes();
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * f[i];
  return s;
}

// sum over faces of sigma r^{N-1} (u_{i+1}-u_i)^2 / h: the form paired with `laplacian`.
inline double dirichlet_form(const RadialGrid& g, std::span<const double> u, std::span<const double> v) {
  const auto a = g.face_coefficients();
  double s = 0.0;
  for (int i = 0; i < g.intervals(); ++i) s += a[i] * (u[i + 1] - u[i]) * (v[i + 1] - v[i]);
  return s;
}

inline double dirichlet_form(const RadialField& u) { return dirichlet_form(u.grid(), u.values(), u.values()); }

// Tridiagonal system with sub/super diagonals of length n-1.
struct Tridiagonal {
  std::vector<double> lower, diag, upper;

  std::vector<double> solve(std::vector<double> rhs) const {
    const std::size_t n = diag.size();
    std::vector<double> c(n, 0.0);
    double b = diag[0];
    if (b == 0.0) throw DomainError("Tridiagonal: zero pivot");
    if (n > 1) c[0] = upper[0] / b;
    rhs[0] /= b;
    for (std::size_t i = 1; i < n; ++i) {
      b = diag[i] - lower[i - 1] * c[i - 1];
      if (b == 0.0) throw DomainError("Tridiagonal: zero pivot");
      if (i + 1 < n) c[i] = upper[i] / b;
      rhs[i] = (rhs[i] - lower[i - 1] * rhs[i - 1]) / b;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
    return rhs;
  }
};

// K + diag(shift * W) on the M interior unknowns.
inline Tridiagonal shifted_stiffness(const RadialGrid& g, double shift) {
  const int M = g.intervals();
  const auto a = g.face_coefficients();
  const auto W = g.cell_volumes();
  Tridiagonal T;
  T.diag.resize(M);
  T.lower.resize(M - 1);
  T.upper.resize(M - 1);
  for (int i = 0; i < M; ++i) {
    T.diag[i] = a[i] + (i > 0 ? a[i - 1] : 0.0) + shift * W[i];
    if (i + 1 < M) T.lower[i] = T.upper[i] = -a[i];
  }
  return T;
}

struct EigenOptions {
  double rel_tol = 1e-12;
  int max_iter = 10000;
};

// Smallest eigenvalue of K u = lambda W u by inverse power iteration.
inline double first_eigenvalue(const RadialGrid& g, EigenOptions opt = {}) {
  const int M = g.intervals();
  const auto W = g.cell_volumes();
  const Tridiagonal K = shifted_stiffness(g, 0.0);
  std::vector<double> u(M);
  for (int i = 0; i < M; ++i) u[i] = std::cos(0.5 * std::numbers::pi * g.r(i) / g.radius());
  double lam = 0.0;
  for (int it = 0; it < opt.max_iter; ++it) {
    std::vector<double> rhs(M);
    for (int i = 0; i < M; ++i) rhs[i] = W[i] * u[i];
    auto z = K.solve(rhs);
    double num = 0.0, den = 0.0;  // Rayleigh quotient of z: (z, W u) / (z, W z)
    for (int i = 0; i < M; ++i) {
      num += z[i] * rhs[i];
      den += W[i] * z[i] * z[i];
    }
    const double new_lam = num / den;
    const double nrm = std::sqrt(den);
    for (int i = 0; i < M; ++i) u[i] = z[i] / nrm;
    if (it > 0 && std::abs(new_lam - lam) <= opt.rel_tol * new_lam) return new_lam;
    lam = new_lam;
  }
  throw ConvergenceError("first_eigenvalue: inverse iteration did not converge", opt.max_iter, lam);
}

// Columns r,<name>... with 17 significant digits.
inline void write_csv(std::ostream& os, const RadialGrid& g, const std::vector<std::string>& names,
                      const std::vector<std::span<const double>>& cols) {
  os << "r";
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  char buf[64];
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", g.r(static_cast<int>(i)));
    os << buf;
    for (const auto& c : cols) {
      std::snprintf(buf, sizeof buf, "%.17g", c[i]);
      os << ',' << buf;
    }
    os << '\n';
  }
}

inline void write_csv(std::ostream& os, const RadialField& f, const std::string& name = "value") {
  write_csv(os, f.grid(), {name}, {f.values()});
}

}  // namespace critsys
