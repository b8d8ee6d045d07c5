#include <gtest/gtest.h>

#include "critsys/solver.hpp"

using namespace critsys;

namespace {

double lam1(int N, int M) { return first_eigenvalue(*make_grid(N, 1.0, M)); }

}  // namespace

TEST(Scalar, BetweenBrezisNirenbergBounds) {
  for (int N : {5, 6}) {
    const auto g = make_grid(N, 1.0, 512);
    const double l = first_eigenvalue(*g);
    const double SN = compute_S(N).S_pow();
    for (double frac : {0.1, 0.3, 0.6}) {
      const SystemParams P{N, 1.0, 1.0, -1.0, -frac * l, -frac * l};
      const auto r = scalar_ground_state(P, 1, g);
      EXPECT_LT(r.B, SN / N) << "N=" << N << " frac=" << frac;
      EXPECT_GT(r.B, std::pow(1.0 - frac, 0.5 * N) * SN / N);
      EXPECT_TRUE(r.stats.converged);
      EXPECT_LT(r.stats.residual, 1e-8);
    }
  }
}

TEST(Scalar, MuScaling) {
  const auto g = make_grid(5, 1.0, 512);
  const double l = first_eigenvalue(*g);
  const SystemParams P{5, 1.0, 2.0, -1.0, -0.3 * l, -0.3 * l};
  const auto b1 = scalar_ground_state(P, 1, g), b2 = scalar_ground_state(P, 2, g);
  EXPECT_NEAR(b2.B / b1.B, std::pow(2.0, -1.5), 1e-4);
}

TEST(Scalar, DecreasesWithLambda) {
  const auto g = make_grid(6, 1.0, 256);
  const double l = first_eigenvalue(*g);
  double prev = 1e300;
  for (double frac : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const SystemParams P{6, 1.0, 1.0, -1.0, -frac * l, -frac * l};
    const double B = scalar_ground_state(P, 1, g).B;
    EXPECT_LT(B, prev);
    prev = B;
  }
}

TEST(Scalar, ProfileIsPositiveAndDecreasing) {
  const auto g = make_grid(6, 1.0, 256);
  const SystemParams P{6, 1.0, 1.0, -1.0, -0.5 * lam1(6, 256), -1.0};
  const auto r = scalar_ground_state(P, 1, g);
  for (int i = 0; i < g->intervals(); ++i) {
    ASSERT_GT(r.u[i], 0.0);
    ASSERT_GE(r.u[i], r.u[i + 1]);
  }
  EXPECT_EQ(r.u[g->intervals()], 0.0);
}

TEST(Coupled, SymmetricPairIsProportional) {
  const auto g = make_grid(6, 1.0, 512);
  const double l = first_eigenvalue(*g);
  const SystemParams P{6, 1.0, 1.0, 1.0, -0.3 * l, -0.3 * l};
  const auto r = solve_coupled(P, g, SolveMode::two_constraint);
  const auto s = solve_k0_l0(P);
  EXPECT_LT(r.report.ratio_deviation, 1e-2);
  EXPECT_NEAR(r.report.B / ((s.k + s.l) * r.report.B_mu1), 1.0, 1e-2);
  EXPECT_LT(r.report.nehari_identity_gap / r.report.B, 1e-12);
  EXPECT_LT(r.report.residual_norm, 1e-7);
}

TEST(Coupled, ModesAgreeForSymmetricAttraction) {
  const auto g = make_grid(5, 1.0, 256);
  const double l = first_eigenvalue(*g);
  const SystemParams P{5, 1.0, 1.0, 2.0, -0.4 * l, -0.4 * l};
  const auto a = solve_coupled(P, g, SolveMode::two_constraint);
  const auto b = solve_coupled(P, g, SolveMode::mountain_pass);
  EXPECT_NEAR(a.report.B / b.report.B, 1.0, 1e-6);
}

TEST(Coupled, DescentNeverClimbs) {
  const auto g = make_grid(6, 1.0, 256);
  const double l = first_eigenvalue(*g);
  const SystemParams P{6, 1.0, 2.0, -5.0, -0.9 * l, -0.9 * l};
  const auto r = solve_coupled(P, g, SolveMode::two_constraint);
  EXPECT_LE(r.report.max_energy_increase, 1e-12 * std::abs(r.report.B));
}

TEST(Coupled, RepulsiveBelowThresholds) {
  const auto g = make_grid(6, 1.0, 512);
  const double l = first_eigenvalue(*g);
  for (double beta : {-1.0, -10.0}) {
    const SystemParams P{6, 1.0, 2.0, beta, -0.9 * l, -0.9 * l};
    const auto r = solve_coupled(P, g, SolveMode::two_constraint);
    for (const auto& t : r.report.thresholds) EXPECT_LT(r.report.B, t.value) << t.name << " beta=" << beta;
    for (std::size_t i = 0; i < r.pair.u.size(); ++i) {
      ASSERT_GE(r.pair.u[i], 0.0);
      ASSERT_GE(r.pair.v[i], 0.0);
    }
  }
}

TEST(Coupled, ResultIsDeterministic) {
  const auto g = make_grid(5, 1.0, 128);
  const double l = first_eigenvalue(*g);
  const SystemParams P{5, 1.0, 2.0, -3.0, -0.95 * l, -0.95 * l};
  const auto a = solve_coupled(P, g, SolveMode::two_constraint);
  const auto b = solve_coupled(P, g, SolveMode::two_constraint);
  EXPECT_EQ(a.pair.u.data(), b.pair.u.data());
  EXPECT_EQ(a.pair.v.data(), b.pair.v.data());
}

TEST(Subcritical, ChainConvergesAndEnergiesMove) {
  const auto g = make_grid(6, 1.0, 256);
  const double l = first_eigenvalue(*g);
  const SystemParams P{6, 1.0, 1.0, 1.0, -0.3 * l, -0.3 * l};
  int calls = 0;
  const auto r = solve_subcritical(P, g, {0.2, 0.1, 0.05, 0.02}, {}, SolveMode::mountain_pass,
                                   [&](double, const FieldPair&, const SolveStats& st) {
                                     ++calls;
                                     EXPECT_TRUE(st.converged);
                                   });
  EXPECT_EQ(calls, 4);
  ASSERT_EQ(r.report.eps_energies.size(), 4u);
  for (int i = 0; i < g->intervals(); ++i) {
    ASSERT_GE(r.pair.u[i], r.pair.u[i + 1] - 1e-12);
    ASSERT_GE(r.pair.v[i], r.pair.v[i + 1] - 1e-12);
  }
}

TEST(Subcritical, ScheduleValidation) {
  const auto g = make_grid(6, 1.0, 64);
  const SystemParams P{6, 1.0, 1.0, 1.0, -1.0, -1.0};
  EXPECT_THROW(solve_subcritical(P, g, {}), DomainError);
  EXPECT_THROW(solve_subcritical(P, g, {0.1, 0.2}), DomainError);
  EXPECT_THROW(solve_subcritical(P, g, {0.6}), DomainError);
}

TEST(Resolution, SpikeIsNotResolved) {
  const auto g = make_grid(6, 1.0, 64);
  RadialField spike(g);
  spike[0] = 1.0;
  spike[1] = 0.6;
  EXPECT_FALSE(resolved(spike));
  EXPECT_FALSE(resolved(RadialField(g)));
  EXPECT_TRUE(resolved(RadialField::from_function(g, [](double r) { return 1.0 - r; })));
}

TEST(Admissibility, LambdaOutsideRangeThrows) {
  const auto g = make_grid(5, 1.0, 128);
  const double l = first_eigenvalue(*g);
  EXPECT_THROW(solve_coupled(SystemParams{5, 1, 1, -1, -1.01 * l, -1.0}, g, SolveMode::two_constraint), AdmissibilityError);
  EXPECT_THROW(solve_coupled(SystemParams{5, 1, 1, -1, -1.0, 0.5}, g, SolveMode::two_constraint), AdmissibilityError);
  EXPECT_THROW(scalar_ground_state(SystemParams{5, 1, 1, -1, 0.0, -1.0}, 1, g), AdmissibilityError);
  EXPECT_THROW(solve_coupled(SystemParams{5, 1, 1, 0.0, -1.0, -1.0}, g, SolveMode::two_constraint), DomainError);
  EXPECT_THROW(solve_coupled(SystemParams{4, 1, 1, 1.0, -1.0, -1.0}, g, SolveMode::two_constraint), DomainError);
}
