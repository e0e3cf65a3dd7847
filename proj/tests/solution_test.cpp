#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace descsys;
namespace dt = descsys::testing;
using dt::Rng;

namespace {

const Tolerances kTol;

Matrix m2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

struct Decomposed {
  RegularSystem sys;
  WeierstrassDecomposition w;
};

Decomposed decompose(const Matrix& f, const Matrix& g) {
  auto sys = certify_regularity(f, g, kTol);
  auto w = weierstrass_decompose(sys, kTol);
  return {std::move(sys), std::move(w)};
}

Decomposed diagonal_pair() { return decompose(m2(1, 0, 0, 0), m2(0.5, 0, 0, 1)); }

double worst_state_gap(const TrajectoryRecord& a, const TrajectoryRecord& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.states.size(); ++k) worst = std::max(worst, (a.states[k] - b.states[k]).norm());
  return worst;
}

}  // namespace

TEST(ConsistencyProjector, CoordinateAxis) {
  const auto d = diagonal_pair();
  EXPECT_LE((consistency_projector(d.w) - m2(1, 0, 0, 0)).norm(), 1e-12);
}

TEST(ConsistencyProjector, FullSpaceWhenNoInfinitePart) {
  const auto d = decompose(Matrix::Identity(3, 3), Matrix::Identity(3, 3) * 0.25);
  EXPECT_LE((consistency_projector(d.w) - Matrix::Identity(3, 3)).norm(), 1e-12);
}

TEST(ConsistencyProjector, ZeroWhenAllInfinite) {
  const auto d = decompose(m2(0, 1, 0, 0), Matrix::Identity(2, 2));
  ASSERT_EQ(d.w.p, 0);
  EXPECT_EQ(consistency_projector(d.w), Matrix::Zero(2, 2));
}

TEST(ConsistencyProjector, DependentColumnsThrow) {
  auto d = diagonal_pair();
  d.w.Qp = Matrix::Zero(2, 1);
  EXPECT_THROW(consistency_projector(d.w, kTol), RankDeficient);
}

TEST(ConsistencyProjector, LawsOnRandomSystems) {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pl = dt::random_planted(rng);
    const auto d = decompose(pl.F, pl.G);
    const Matrix pi = consistency_projector(d.w, kTol);
    EXPECT_LE((pi * pi - pi).norm(), kTol.residual_abs);
    EXPECT_LE((pi.adjoint() - pi).norm(), kTol.residual_abs);
    EXPECT_NEAR(pi.trace().real(), static_cast<double>(d.w.p), kTol.residual_abs);
    EXPECT_LE((pi * d.w.Qp - d.w.Qp).norm(), kTol.residual_abs * (1.0 + d.w.Qp.norm()));
  }
}

TEST(CheckConsistency, PointOnTheAxis) {
  const auto r = check_consistency(v2(3, 0), diagonal_pair().w, kTol);
  EXPECT_TRUE(r.consistent);
  EXPECT_NEAR(r.distance, 0.0, 1e-12);
}

TEST(CheckConsistency, PointOffTheAxis) {
  const auto r = check_consistency(v2(1, 1), diagonal_pair().w, kTol);
  EXPECT_FALSE(r.consistent);
  EXPECT_NEAR(r.distance, 1.0, 1e-12);
  EXPECT_LE((r.projected_Y0 - v2(1, 0)).norm(), 1e-12);
}

TEST(CheckConsistency, EverythingConsistentWithoutInfinitePart) {
  const auto d = decompose(Matrix::Identity(2, 2), m2(0.1, 2, -1, 0.3));
  Rng rng(32);
  for (int i = 0; i < 20; ++i) {
    const auto r = check_consistency(dt::random_vector(2, rng, true), d.w, kTol);
    EXPECT_TRUE(r.consistent);
    EXPECT_LE(r.distance, 1e-11);
  }
}

TEST(CheckConsistency, WrongLengthThrows) {
  EXPECT_THROW(check_consistency(Vector::Ones(3), diagonal_pair().w, kTol), DimensionMismatch);
}

TEST(CheckConsistency, ThresholdScalesWithNorm) {
  // A relative error of 1e-12 on a huge vector is still consistent.
  const auto r = check_consistency(v2(1e6, 1e-6), diagonal_pair().w, kTol);
  EXPECT_TRUE(r.consistent);
}

TEST(OptimalTrajectory, DiagonalPair) {
  const auto d = diagonal_pair();
  const auto t = optimal_trajectory(d.sys, v2(1, 1), d.w, 3, kTol);
  ASSERT_EQ(t.states.size(), 4u);
  ASSERT_EQ(t.residuals.size(), 3u);
  const double expected[] = {1.0, 0.5, 0.25, 0.125};
  for (int k = 0; k < 4; ++k) EXPECT_LE((t.states[k] - v2(expected[k], 0)).norm(), 1e-12) << "k = " << k;
}

TEST(OptimalTrajectory, StandardSystem) {
  const auto d = decompose(Matrix::Identity(2, 2), Matrix::Identity(2, 2) * 0.5);
  const auto t = optimal_trajectory(d.sys, v2(2, 4), d.w, 2, kTol);
  EXPECT_LE((t.states[0] - v2(2, 4)).norm(), 1e-12);
  EXPECT_LE((t.states[1] - v2(1, 2)).norm(), 1e-12);
  EXPECT_LE((t.states[2] - v2(0.5, 1)).norm(), 1e-12);
}

TEST(OptimalTrajectory, ConsistentStartIsKept) {
  Rng rng(33);
  for (int trial = 0; trial < 30; ++trial) {
    const auto pl = dt::random_planted(rng);
    const auto d = decompose(pl.F, pl.G);
    const Vector y0 = d.w.Qp * dt::random_vector(d.w.p, rng, true);
    const auto t = optimal_trajectory(d.sys, y0, d.w, 0, kTol);
    EXPECT_LE((t.states[0] - y0).norm(), kTol.residual_abs * (1.0 + y0.norm()));
  }
}

TEST(OptimalTrajectory, NoFiniteEigenvaluesGivesZero) {
  const auto d = decompose(m2(0, 1, 0, 0), Matrix::Identity(2, 2));
  const auto t = optimal_trajectory(d.sys, v2(1, -2), d.w, 4, kTol);
  ASSERT_EQ(t.states.size(), 5u);
  for (const auto& s : t.states) EXPECT_EQ(s.norm(), 0.0);
}

TEST(OptimalTrajectory, RejectsNegativeHorizon) {
  const auto d = diagonal_pair();
  EXPECT_THROW(optimal_trajectory(d.sys, v2(1, 1), d.w, -1, kTol), std::invalid_argument);
}

TEST(OptimalTrajectory, SatisfiesDynamics) {
  Rng rng(34);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pl = dt::random_planted(rng);
    const auto d = decompose(pl.F, pl.G);
    const auto t = optimal_trajectory(d.sys, dt::random_vector(d.sys.m, rng, true), d.w, 100, kTol);
    EXPECT_LE(audit_residuals(d.sys, t), trajectory_residual_bound(d.sys, t, kTol)) << "trial " << trial;
  }
}

TEST(OptimalTrajectory, RepairIsIdempotent) {
  Rng rng(35);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pl = dt::random_planted(rng);
    const auto d = decompose(pl.F, pl.G);
    const Vector y0 = dt::random_vector(d.sys.m, rng, true);
    const Vector projected = consistency_projector(d.w, kTol) * y0;
    const auto a = optimal_trajectory(d.sys, y0, d.w, 20, kTol);
    const auto b = optimal_trajectory(d.sys, projected, d.w, 20, kTol);
    EXPECT_LE(worst_state_gap(a, b), kTol.residual_abs * (1.0 + a.max_state_norm()));
  }
}

TEST(OptimalTrajectory, IsLinear) {
  Rng rng(36);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pl = dt::random_planted(rng);
    const auto d = decompose(pl.F, pl.G);
    const Vector y = dt::random_vector(d.sys.m, rng, true);
    const Vector z = dt::random_vector(d.sys.m, rng, true);
    const Complex alpha(dt::uniform(rng, -2, 2), dt::uniform(rng, -2, 2));
    const Complex beta(dt::uniform(rng, -2, 2), dt::uniform(rng, -2, 2));
    const auto ty = optimal_trajectory(d.sys, y, d.w, 20, kTol);
    const auto tz = optimal_trajectory(d.sys, z, d.w, 20, kTol);
    const auto tc = optimal_trajectory(d.sys, alpha * y + beta * z, d.w, 20, kTol);
    for (std::size_t k = 0; k < tc.states.size(); ++k) {
      const Vector combined = alpha * ty.states[k] + beta * tz.states[k];
      EXPECT_LE((tc.states[k] - combined).norm(), kTol.residual_abs * (1.0 + combined.norm()));
    }
  }
}

TEST(OptimalTrajectory, ProjectionIsTheNearestConsistentPoint) {
  Rng rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pl = dt::random_planted(rng);
    const auto d = decompose(pl.F, pl.G);
    const Vector y0 = dt::random_vector(d.sys.m, rng, true);
    const double best = check_consistency(y0, d.w, kTol).distance;
    for (int i = 0; i < 200; ++i) {
      const Vector z = d.w.Qp * dt::random_vector(d.w.p, rng, true);
      EXPECT_LE(best, (y0 - z).norm() + kTol.residual_abs);
    }
  }
}

TEST(ClosedForm, ZeroCoordinate) {
  const auto d = diagonal_pair();
  const auto t = closed_form_solution(d.sys, Vector::Zero(1), d.w, 5);
  for (const auto& s : t.states) EXPECT_EQ(s.norm(), 0.0);
}

TEST(ClosedForm, ScalarGeometricSequence) {
  const auto d = diagonal_pair();
  // Qp is e1 up to a unit scalar; pick C so that Qp C = e1.
  const Vector c = Vector::Constant(1, 1.0 / d.w.Qp(0, 0));
  const auto t = closed_form_solution(d.sys, c, d.w, 2);
  EXPECT_LE((t.states[0] - v2(1, 0)).norm(), 1e-12);
  EXPECT_LE((t.states[1] - v2(0.5, 0)).norm(), 1e-12);
  EXPECT_LE((t.states[2] - v2(0.25, 0)).norm(), 1e-12);
  EXPECT_EQ(t.coordinate_C, c);
}

TEST(ClosedForm, DefectiveBlockBinomialTerms) {
  // F = I, G = J(0.9, 3): Y_k = J^k Y_0 has entries binom(k, d) 0.9^(k-d).
  const auto d = decompose(Matrix::Identity(3, 3), jordan_block(0.9, 3));
  const Vector y0 = (Vector(3) << 0.0, 0.0, 1.0).finished();
  const auto t = closed_form_solution(d.sys, least_squares_solve(d.w.Qp, y0), d.w, 10);
  const Vector expected = (Vector(3) << 45 * std::pow(0.9, 8), 10 * std::pow(0.9, 9), std::pow(0.9, 10)).finished();
  EXPECT_LE((t.states[10] - expected).norm(), 1e-10);
}

TEST(ClosedForm, AgreesWithIteratedTrajectory) {
  Rng rng(38);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pl = dt::random_planted(rng);
    const auto d = decompose(pl.F, pl.G);
    const Vector y0 = dt::random_vector(d.sys.m, rng, true);
    const auto iterated = optimal_trajectory(d.sys, y0, d.w, 100, kTol);
    const auto closed = closed_form_solution(d.sys, least_squares_solve(d.w.Qp, y0, kTol), d.w, 100);
    for (std::size_t k = 0; k < closed.states.size(); ++k)
      EXPECT_LE((iterated.states[k] - closed.states[k]).norm(), 1e-9 * (1.0 + closed.states[k].norm()))
          << "trial " << trial << " k " << k;
  }
}

TEST(ClosedForm, WrongCoordinateLengthThrows) {
  const auto d = diagonal_pair();
  EXPECT_THROW(closed_form_solution(d.sys, Vector::Zero(2), d.w, 3), DimensionMismatch);
}

TEST(AuditResiduals, EmptyHorizonIsZero) {
  const auto d = diagonal_pair();
  EXPECT_EQ(audit_residuals(d.sys, optimal_trajectory(d.sys, v2(1, 1), d.w, 0, kTol)), 0.0);
}

TEST(AuditResiduals, CorruptedStateIsDetected) {
  Rng rng(39);
  for (int trial = 0; trial < 30; ++trial) {
    const auto pl = dt::random_planted(rng);
    const auto d = decompose(pl.F, pl.G);
    auto t = optimal_trajectory(d.sys, dt::random_vector(d.sys.m, rng, true), d.w, 5, kTol);
    t.states[3](dt::uniform_int(rng, 0, d.sys.m - 1)) += 1.0;
    EXPECT_GT(audit_residuals(d.sys, t), trajectory_residual_bound(d.sys, t, kTol)) << "trial " << trial;
  }
}
