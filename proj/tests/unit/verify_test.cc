#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.h"
#include "koopctl/design.h"
#include "koopctl/errors.h"
#include "koopctl/io.h"
#include "koopctl/linalg.h"
#include "koopctl/verify.h"

namespace koopctl {
namespace {

Plant decay() {
  return Plant("decay", 1, 1, [](const Vector& x) { return Vector(-x); },
               [](const Vector&) { return Matrix::Ones(1, 1); }, Box::uniform(1, -1, 1), Box::uniform(1, -1, 1));
}

Vector zero_policy(const Vector&) { return Vector::Zero(1); }

double decay_error(double tol_or_step, bool fixed) {
  SimOptions o;
  o.horizon = 1.0;
  o.converge_tol = 0.0;
  if (fixed) {
    o.fixed_step = tol_or_step;
  } else {
    o.rtol = o.atol = tol_or_step;
  }
  const Trajectory t = simulate(decay(), zero_policy, Vector::Constant(1, 1.0), o);
  EXPECT_NEAR(t.t.back(), 1.0, 1e-12);
  return std::abs(t.final_state()(0) - std::exp(-1.0));
}

struct CookedUp {
  Plant plant = make_example(ExampleId::kCookedUp);
  Lifting lifting = cooked_up_lifting();
  DesignResult d;
  CookedUp() {
    const DesignOutcome o = synthesize(testing::exact_cooked_up(), UncertaintyRegion::identity(3, 500), 1);
    d = *o.design;
  }
};

TEST(Simulate, EquilibriumStays) {
  const CookedUp c;
  const Trajectory t = simulate(c.plant, c.d, c.lifting, Vector::Zero(2));
  EXPECT_TRUE(t.converged());
  EXPECT_EQ(t.final_state().norm(), 0.0);
  EXPECT_EQ(lyapunov_audit(t).max_increase, 0.0);
}

TEST(Simulate, LinearDecayMatchesClosedForm) { EXPECT_LT(decay_error(1e-9, false), 1e-6); }

TEST(Simulate, IntegratorOrder) {
  for (double h : {0.2, 0.1, 0.05}) {
    EXPECT_GE(decay_error(h, true) / decay_error(h / 2, true), 4.0) << h;
  }
}

TEST(Simulate, TimeGridIncreasing) {
  const CookedUp c;
  const Trajectory t = simulate(c.plant, c.d, c.lifting, Eigen::Vector2d(0.5, -0.5));
  for (size_t k = 1; k < t.t.size(); ++k) EXPECT_GT(t.t[k], t.t[k - 1]);
  for (const auto& x : t.x) EXPECT_TRUE(x.allFinite());
  EXPECT_EQ(t.x.size(), t.V.size());
}

TEST(Simulate, SingularFeedbackEndsRun) {
  const Trajectory t = simulate(decay(), [](const Vector&) -> Vector { throw NumericalError("no"); },
                                Vector::Constant(1, 0.5));
  EXPECT_EQ(t.reason, Termination::kSingularFeedback);
}

TEST(Simulate, LeavingDomain) {
  SimOptions o;
  o.domain_radius = 10.0;
  const Trajectory t = simulate(decay(), [](const Vector& x) { return Vector(3.0 * x); }, Vector::Constant(1, 1.0), o);
  EXPECT_EQ(t.reason, Termination::kLeftDomain);
}

TEST(Audit, CertifiedDesignPasses) {
  const CookedUp c;
  for (const Vector& dir : {Vector(Eigen::Vector2d(0.6, 0.8)), Vector(Eigen::Vector2d(-0.8, -0.6)), Vector(Eigen::Vector2d(1, 0))}) {
    const Vector x0 = 0.9 * roa_ray(c.d, c.lifting, dir, 1e4).radius * dir;
    ASSERT_LE(lyapunov_value(c.d, c.lifting, x0), 1.0);
    const Trajectory t = simulate(c.plant, c.d, c.lifting, x0);
    EXPECT_TRUE(t.converged());
    EXPECT_TRUE(lyapunov_audit(t).pass) << lyapunov_audit(t).max_increase;
  }
}

TEST(Audit, FlippedGainFails) {
  CookedUp c;
  c.d.L = -c.d.L;
  c.d.refresh();
  const Trajectory t = simulate(c.plant, c.d, c.lifting, Eigen::Vector2d(0.5, 0.5));
  EXPECT_FALSE(lyapunov_audit(t).pass);
  EXPECT_FALSE(t.converged());
}

TEST(Export, TrajectoryColumns) {
  const CookedUp c;
  const Trajectory t = simulate(c.plant, c.d, c.lifting, Eigen::Vector2d(0.5, 0.5));
  const auto dir = testing::scratch_dir("traj");
  write_trajectory_dat(dir / "t.dat", t);
  const Matrix rows = read_dat(dir / "t.dat");
  EXPECT_EQ(rows.cols(), 1 + 2 + 1 + 1);
  EXPECT_EQ(rows.rows(), static_cast<Eigen::Index>(t.t.size()));
}

TEST(Care, ScalarClosedForms) {
  const Matrix one = Matrix::Ones(1, 1);
  const CareSolution a = solve_care(-one, one, one, one);
  EXPECT_NEAR(a.X(0, 0), std::sqrt(2.0) - 1.0, 1e-12);
  EXPECT_NEAR(a.K(0, 0), std::sqrt(2.0) - 1.0, 1e-12);
  const CareSolution b = solve_care(Matrix::Zero(1, 1), one, one, one);
  EXPECT_NEAR(b.X(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(b.K(0, 0), 1.0, 1e-12);
}

TEST(Care, ResidualOnSurrogates) {
  const Surrogate s = testing::exact_cooked_up();
  for (const LqrBaseline& g : lqr_weight_grid(s)) {
    const Matrix Q = g.q * Matrix::Identity(3, 3);
    const Matrix R = g.r * Matrix::Identity(1, 1);
    const Matrix& X = g.care.X;
    const Matrix res = s.A.transpose() * X + X * s.A - X * s.B0 * R.inverse() * s.B0.transpose() * X + Q;
    EXPECT_LE(res.norm(), 1e-8 * Q.norm());
    Eigen::EigenSolver<Matrix> es(s.A + s.B0 * g.K);
    EXPECT_LT(es.eigenvalues().real().maxCoeff(), 0.0);
  }
  EXPECT_EQ(lqr_weight_grid(s).size(), 9u);
}

TEST(Care, Stabilizability) {
  Matrix A(2, 2);
  A << 1, 0, 0, -1;
  Matrix B(2, 1);
  B << 0, 1;
  EXPECT_FALSE(stabilizable(A, B));
  B << 1, 0;
  EXPECT_TRUE(stabilizable(A, B));
  Surrogate s = testing::exact_cooked_up();
  s.A(0, 0) = 2.0;
  EXPECT_THROW(lqr_baseline(s), ValidationError);
}

TEST(Lyapunov, SolvesEquation) {
  Matrix A(2, 2);
  A << -1, 2, 0, -3;
  const Matrix C = Matrix::Identity(2, 2);
  const Matrix X = solve_lyapunov(A, C);
  EXPECT_LE((A.transpose() * X + X * A + C).norm(), 1e-12);
}

}  // namespace
}  // namespace koopctl
