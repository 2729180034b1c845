#include <gtest/gtest.h>

#include "fixtures.h"
#include "koopctl/design.h"
#include "koopctl/errors.h"
#include "koopctl/linalg.h"
#include "koopctl/lmi.h"
#include "koopctl/rng.h"

namespace koopctl {
namespace {

Surrogate random_surrogate(Rng& rng, int N, int m) {
  Surrogate s;
  s.A = Matrix::Random(N, N);
  s.B0 = Matrix::Random(N, m);
  for (int i = 0; i < m; ++i) s.B.push_back(Matrix::Random(N, N) * rng.uniform(0, 1));
  return s.with_error_bound(rng.uniform(0.01, 0.5), 0.05);
}

UncertaintyRegion random_region(Rng& rng, int N) {
  Matrix a = Matrix::Random(N, N);
  Vector S = Vector::Random(N) * 0.3;
  return UncertaintyRegion(-(a * a.transpose() + 0.2 * Matrix::Identity(N, N)), S, rng.uniform(1, 10));
}

Vector random_z(Rng& rng, int n) {
  Vector z(n);
  for (int i = 0; i < n; ++i) z(i) = rng.uniform(-2, 2);
  return z;
}

// Dense synthesis matrix of theorem 1 written out block by block.
Matrix theorem1_oracle(const Surrogate& s, const UncertaintyRegion& r, const Matrix& P, const Matrix& L,
                       double lam, double tau) {
  const int N = s.N();
  const Matrix B1 = s.B[0];
  Matrix M = Matrix::Zero(3 * N + 2, 3 * N + 2);
  M.block(0, 0, N, N) = -s.A * P - s.B0 * L - P * s.A.transpose() - L.transpose() * s.B0.transpose() -
                        tau * Matrix::Identity(N, N);
  M.block(N, 0, 1, N) = -L - lam * r.S_tilde().transpose() * B1.transpose();
  Matrix PL(N + 1, N);
  PL << P, L;
  M.block(N + 1, 0, N + 1, N) = -PL;
  M.block(2 * N + 2, 0, N, N) = lam * B1.transpose();
  M(N, N) = lam * r.R_tilde();
  M.block(N + 1, N + 1, N + 1, N + 1) = 0.5 * tau / (s.c_r * s.c_r) * Matrix::Identity(N + 1, N + 1);
  M.block(2 * N + 2, 2 * N + 2, N, N) = -lam * r.Q_tilde_inverse();
  return Matrix(M.selfadjointView<Eigen::Lower>());
}

TEST(Theorem1, Dimensions) {
  Rng rng(1);
  for (int N = 1; N <= 5; ++N) {
    const auto p = build_theorem1(random_surrogate(rng, N, 1), random_region(rng, N));
    EXPECT_EQ(p.constraint("synthesis").expr.rows(), 3 * N + 2);
    EXPECT_TRUE(p.constraint("synthesis").strict);
    EXPECT_EQ(p.constraint("invariance").expr.rows(), 2 * N + 2);
    EXPECT_FALSE(p.vars.contains("Lw"));
    EXPECT_TRUE(p.vars.contains("lambda"));
  }
  EXPECT_THROW(build_theorem1(random_surrogate(rng, 3, 2), random_region(rng, 3)), DimensionError);
}

TEST(Theorem1, MatchesBlockOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const int N = 1 + trial % 4;
    const Surrogate s = random_surrogate(rng, N, 1);
    const UncertaintyRegion r = random_region(rng, N);
    const auto p = build_theorem1(s, r);
    const Assignment a = p.vars.unpack(random_z(rng, p.vars.num_scalars()));
    const Matrix got = evaluate(p, p.constraint("synthesis"), a).value;
    const Matrix want =
        theorem1_oracle(s, r, a.at("P"), a.at("L"), a.at("lambda")(0, 0), a.at("tau")(0, 0));
    EXPECT_LE((got - want).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Theorem1, ZeroAssignment) {
  Rng rng(3);
  const auto p = build_theorem1(random_surrogate(rng, 3, 1), random_region(rng, 3));
  const Assignment zero = p.vars.unpack(Vector::Zero(p.vars.num_scalars()));
  EXPECT_EQ(evaluate(p, p.constraint("synthesis"), zero).value.norm(), 0.0);
  // The invariance inequality carries a constant 1 in its last diagonal entry.
  const Matrix inv = evaluate(p, p.constraint("invariance"), zero).value;
  EXPECT_EQ(inv(inv.rows() - 1, inv.cols() - 1), 1.0);
  EXPECT_EQ(inv.norm(), 1.0);
}

TEST(Theorem2, Dimensions) {
  Rng rng(4);
  for (int N = 1; N <= 4; ++N) {
    for (int m = 1; m <= 3; ++m) {
      const auto p = build_theorem2(random_surrogate(rng, N, m), random_region(rng, N));
      EXPECT_EQ(p.constraint("synthesis").expr.rows(), 2 * N + 2 * m + N * m);
      EXPECT_TRUE(p.vars.contains("Lw"));
      EXPECT_TRUE(p.vars.contains("Lambda"));
    }
  }
}

TEST(Theorem2, ReducesToTheorem1) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int N = 1 + trial % 4;
    const Surrogate s = random_surrogate(rng, N, 1);
    const UncertaintyRegion r = random_region(rng, N);
    SynthesisOptions frozen;
    frozen.freeze_Lw = true;
    const auto p1 = build_theorem1(s, r);
    const auto p2 = build_theorem2(s, r, frozen);
    const auto p3 = build_theorem2(s, r);
    Assignment a = p1.vars.unpack(random_z(rng, p1.vars.num_scalars()));
    Assignment b = a;
    b["Lambda"] = a.at("lambda");
    b.erase("lambda");
    const Matrix m1 = evaluate(p1, p1.constraint("synthesis"), a).value;
    EXPECT_EQ(m1, evaluate(p2, p2.constraint("synthesis"), b).value);
    b["Lw"] = Matrix::Zero(1, N);
    EXPECT_EQ(m1, evaluate(p3, p3.constraint("synthesis"), b).value);
  }
}

TEST(Lmi, AffineAndSymmetric) {
  Rng rng(6);
  for (int theorem : {1, 2}) {
    const int m = theorem == 1 ? 1 : 2;
    const auto p = theorem == 1 ? build_theorem1(random_surrogate(rng, 3, 1), random_region(rng, 3))
                                : build_theorem2(random_surrogate(rng, 3, m), random_region(rng, 3));
    for (const auto& c : p.constraints) {
      for (int k = 0; k < 10; ++k) {
        const Vector z1 = random_z(rng, p.vars.num_scalars());
        const Vector z2 = random_z(rng, p.vars.num_scalars());
        const double t = rng.uniform();
        const Matrix a = evaluate(c.expr, t * z1 + (1 - t) * z2).value;
        const Matrix b = t * evaluate(c.expr, z1).value + (1 - t) * evaluate(c.expr, z2).value;
        EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()));
        EXPECT_EQ((a - a.transpose()).cwiseAbs().maxCoeff(), 0.0);
      }
    }
  }
}

TEST(Lmi, ManifestListsConstraints) {
  const auto p = build_theorem1(testing::exact_cooked_up(), UncertaintyRegion::identity(3, 500));
  const Json j = p.manifest();
  EXPECT_EQ(j["theorem"], 1);
  EXPECT_EQ(j["constraints"].size(), p.constraints.size());
  EXPECT_EQ(j["num_scalars"], 12);
}

TEST(Lmi, MissingVariableThrows) {
  const auto p = build_theorem1(testing::exact_cooked_up(), UncertaintyRegion::identity(3, 500));
  Assignment a = p.vars.unpack(Vector::Zero(p.vars.num_scalars()));
  a.erase("tau");
  EXPECT_THROW(evaluate(p, p.constraint("synthesis"), a), ValidationError);
}

TEST(Lmi, CookedUpTheorem1Feasible) {
  const UncertaintyRegion r = UncertaintyRegion::identity(3, 500);
  const DesignOutcome o = synthesize(testing::exact_cooked_up(), r, 1);
  ASSERT_EQ(o.status, DesignStatus::kFeasible) << o.diagnosis;
  for (const auto& c : o.verification.margins) {
    EXPECT_GE(c.min_eig, c.required - 1e-7) << c.name;
  }
  const Assignment a = o.problem.vars.unpack(o.solve.scalars);
  EXPECT_GE(evaluate(o.problem, o.problem.constraint("synthesis"), a).min_eig, o.problem.epsilon - 1e-7);
}

}  // namespace
}  // namespace koopctl
