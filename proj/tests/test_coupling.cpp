#include <gtest/gtest.h>

#include <random>

#include "critsys/coupling.hpp"

using namespace critsys;

namespace {

SystemParams sys(int N, double mu1, double mu2, double beta) { return SystemParams{N, mu1, mu2, beta, -1.0, -1.0}; }

// Random parameter tuples; fixed seeds keep failures reproducible.
struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
  double log_uniform(double a, double b) { return std::exp(uniform(std::log(a), std::log(b))); }
  int dim() { return std::uniform_int_distribution<int>(5, 8)(rng); }
};

}  // namespace

// 50-digit mpmath values (tests/oracles/coupling_oracle.py).
TEST(CouplingOracle, AlphaValues) {
  const auto a = alpha(sys(5, 1, 2, 5), 0.05, 0.05);
  EXPECT_NEAR(a.a1, -0.18567471502152802854, 1e-14);
  EXPECT_NEAR(a.a2, -0.049953834191782699969, 1e-14);
}

TEST(CouplingOracle, HCurve) { EXPECT_NEAR(h_curve(sys(5, 1, 2, 5), 0.3, Curve::h1), 0.055828312065639927352, 1e-14); }

TEST(CouplingOracle, MinimalRoot) {
  const auto s = solve_k0_l0(sys(5, 1, 2, 5));
  EXPECT_NEAR(s.k, 0.052208683800636865615, 1e-13);
  EXPECT_NEAR(s.l, 0.067045739995013868154, 1e-13);
  EXPECT_TRUE(s.is_minimal_k);
  EXPECT_LT(s.residual, 1e-10);
}

TEST(CouplingOracle, GOfBeta) { EXPECT_NEAR(g_of_beta(sys(5, 1, 2, 1), 3.0), 4.290851014231226345, 1e-13); }

TEST(CouplingOracle, Beta0) {
  EXPECT_NEAR(solve_beta0(sys(6, 1, 4, 1)), 4.2073034510758916947, 1e-12);
  EXPECT_NEAR(solve_beta0(sys(5, 1, 2, 1)), 2.4079509057672391526, 1e-12);
}

// Below (p-1) mu the minimal root leaves the symmetric line (pitchfork).
TEST(CouplingOracle, MinimalRootBelowPitchfork) {
  const auto lo = solve_k0_l0(sys(6, 1, 1, 0.1));
  EXPECT_NEAR(lo.k, 0.000104123501034976, 1e-12);
  const auto mid = solve_k0_l0(sys(6, 1, 1, 0.45));
  EXPECT_NEAR(mid.k, 0.125085331823337, 1e-11);
  // the symmetric root (mu + beta)^{-(N-2)/2} is still a root
  const auto roots = all_coupling_roots(sys(6, 1, 1, 0.45));
  bool has_sym = false;
  for (const auto& r : roots) has_sym |= std::abs(r.k - 0.475624256837099) < 1e-10;
  EXPECT_TRUE(has_sym);
}

TEST(Coupling, SymmetricClosedForm) {
  Gen g(11);
  for (int t = 0; t < 200; ++t) {
    const int N = g.dim();
    const double mu = g.log_uniform(0.1, 10.0);
    auto P = sys(N, mu, mu, 0.0);
    P.beta = P.beta_uniqueness_floor() * (1.0 + g.log_uniform(1e-2, 1e2));
    const auto s = solve_k0_l0(P);
    const double exact = std::pow(mu + P.beta, -0.5 * (N - 2));
    ASSERT_NEAR(s.k, exact, 1e-10 * std::max(1.0, exact)) << "N=" << N << " mu=" << mu << " beta=" << P.beta;
    ASSERT_NEAR(s.l, exact, 1e-10 * std::max(1.0, exact));
  }
}

TEST(Coupling, SwapSymmetry) {
  Gen g(12);
  for (int t = 0; t < 100; ++t) {
    const auto P = sys(g.dim(), g.log_uniform(0.2, 5), g.log_uniform(0.2, 5), g.log_uniform(0.05, 20));
    const auto a = solve_k0_l0(P);
    const auto b = solve_k0_l0(P.swapped());
    // the swapped system's minimal-k root is the original's minimal-l root, so
    // compare through the full root sets
    bool found = false;
    for (const auto& r : all_coupling_roots(P.swapped())) found |= std::abs(r.k - a.l) < 1e-9 && std::abs(r.l - a.k) < 1e-9;
    ASSERT_TRUE(found);
    ASSERT_LT(b.residual, 1e-10);
  }
}

TEST(Coupling, RootsSolveTheSystem) {
  Gen g(13);
  for (int t = 0; t < 200; ++t) {
    const auto P = sys(g.dim(), g.log_uniform(0.2, 5), g.log_uniform(0.2, 5), g.log_uniform(0.01, 50));
    const auto s = solve_k0_l0(P);
    const auto a = alpha(P, s.k, s.l);
    ASSERT_LT(std::max(std::abs(a.a1), std::abs(a.a2)), 1e-10);
    for (const auto& r : all_coupling_roots(P)) ASSERT_GE(r.k, s.k * (1 - 1e-12));
  }
}

TEST(Coupling, Beta0EqualMuExact) {
  for (int N = 5; N <= 9; ++N)
    for (double mu : {0.25, 1.0, 2.0, 7.0}) EXPECT_DOUBLE_EQ(solve_beta0(sys(N, mu, mu, 1)), (N / (N - 2.0) - 1.0) * mu);
}

TEST(Coupling, Beta0Equation) {
  Gen g(14);
  for (int t = 0; t < 100; ++t) {
    const auto P = sys(g.dim(), g.log_uniform(0.1, 10), g.log_uniform(0.1, 10), 1);
    const double b0 = solve_beta0(P);
    ASSERT_NEAR(g_of_beta(P, b0), beta0_target(P), 1e-10 * beta0_target(P));
    ASSERT_GE(b0, P.beta_uniqueness_floor());
  }
}

TEST(Coupling, JacobianDeterminant) {
  Gen g(15);
  for (int t = 0; t < 100; ++t) {
    auto P = sys(g.dim(), g.log_uniform(0.2, 5), g.log_uniform(0.2, 5), 0);
    P.beta = solve_beta0(P) * (1.0 + g.log_uniform(1e-3, 10));
    const auto s = solve_k0_l0(P);
    const auto J = jacobian_at(P, s);
    ASSERT_LT(J.det, 0.0);
    ASSERT_NEAR(J.det, J.det_closed_form, 1e-8 * std::abs(J.det_closed_form));
    ASSERT_LT(P.p() * P.mu1 * std::pow(s.k, P.p() - 1), 1.0);
    ASSERT_LT(P.p() * P.mu2 * std::pow(s.l, P.p() - 1), 1.0);
  }
}

TEST(Coupling, JacobianMatchesFiniteDifferences) {
  const auto P = sys(6, 1.0, 2.0, 3.0);
  const double k = 0.2, l = 0.3, h = 1e-6;
  const auto J = jacobian_at(P, k, l);
  const auto ap = alpha(P, k + h, l), am = alpha(P, k - h, l);
  const auto bp = alpha(P, k, l + h), bm = alpha(P, k, l - h);
  EXPECT_NEAR(J.J[0][0], (ap.a1 - am.a1) / (2 * h), 1e-6);
  EXPECT_NEAR(J.J[1][0], (ap.a2 - am.a2) / (2 * h), 1e-6);
  EXPECT_NEAR(J.J[0][1], (bp.a1 - bm.a1) / (2 * h), 1e-6);
  EXPECT_NEAR(J.J[1][1], (bp.a2 - bm.a2) / (2 * h), 1e-6);
}

TEST(Coupling, H1PlusKIncreasing) {
  Gen g(16);
  for (int t = 0; t < 30; ++t) {
    auto P = sys(g.dim(), g.log_uniform(0.2, 5), g.log_uniform(0.2, 5), 0);
    P.beta = P.beta_uniqueness_floor() * (1.0 + g.log_uniform(1e-3, 10));
    const double kmax = std::pow(P.mu1, -P.inv_pm1());
    double prev = -1.0;
    for (int i = 1; i <= 1000; ++i) {
      const double k = kmax * i / 1000.0;
      const double v = h_curve(P, k, Curve::h1) + k;
      ASSERT_GT(v, prev);
      prev = v;
    }
  }
}

TEST(Coupling, RegionUniqueness) {
  const auto P = sys(6, 1.0, 2.0, 3.0);
  const auto u = check_region_uniqueness(P, solve_k0_l0(P), 20000);
  EXPECT_TRUE(u.passed);
  EXPECT_TRUE(u.sum_bound_ok);
  EXPECT_GE(u.samples, 20000u);
}

TEST(Coupling, BranchStartsDecoupled) {
  const auto P = sys(6, 1.0, 4.0, 0.0);
  const auto br = continue_branch(P, 0.1, 50);
  ASSERT_FALSE(br.empty());
  EXPECT_DOUBLE_EQ(br.front().beta, 0.0);
  EXPECT_NEAR(br.front().sol.k, 1.0, 1e-14);
  EXPECT_NEAR(br.front().sol.l, 1.0 / 16.0, 1e-14);
  for (const auto& b : br) {
    const auto Pb = sys(6, 1.0, 4.0, b.beta);
    if (b.beta > 0.0) {
      const auto a = alpha(Pb, b.sol.k, b.sol.l);
      ASSERT_LT(std::max(std::abs(a.a1), std::abs(a.a2)), 1e-10);
    }
    ASSERT_EQ(b.above_min_threshold, b.sol.k + b.sol.l > std::min(1.0, 1.0 / 16.0));
  }
  EXPECT_NEAR(br.back().beta, 0.1, 1e-14);
}

TEST(Coupling, BranchSymmetric) {
  for (const auto& b : continue_branch(sys(7, 2.0, 2.0, 0.0), 1.0, 40)) ASSERT_NEAR(b.sol.k, b.sol.l, 1e-12);
}

TEST(Coupling, BranchReportsLastGoodBeta) {
  try {
    continue_branch(sys(6, 1.0, 4.0, 0.0), 2.0, 100);
    FAIL() << "expected the branch to leave the positive quadrant";
  } catch (const ContinuationError& e) {
    EXPECT_GT(e.last_good_beta(), 0.1);
    EXPECT_LT(e.last_good_beta(), 2.0);
  }
}

TEST(Coupling, Errors) {
  EXPECT_THROW(alpha1(sys(6, 1, 1, 1), 0.0, 0.5), DomainError);
  EXPECT_THROW(alpha2(sys(6, 1, 1, 1), 0.5, -1.0), DomainError);
  EXPECT_THROW(sys(4, 1, 1, 1).validate(), DomainError);
  EXPECT_THROW(sys(6, -1, 1, 1).validate(), DomainError);
  EXPECT_THROW(continue_branch(sys(6, 1, 1, 0), -1.0, 10), DomainError);
  EXPECT_THROW(jacobian_at(sys(6, 1, 1, 1), 0.0, 1.0), DomainError);
}
