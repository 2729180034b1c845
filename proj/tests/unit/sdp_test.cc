#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.h"
#include "koopctl/design.h"
#include "koopctl/linalg.h"
#include "koopctl/rng.h"
#include "koopctl/sdp.h"

namespace koopctl {
namespace {

AffineMatrix one() { return AffineMatrix::constant(Matrix::Ones(1, 1)); }

SynthesisProblem scalar_problem(bool infeasible) {
  SynthesisProblem p;
  p.N = 1;
  p.vars.add_scalar("p");
  const AffineMatrix x = p.vars.expr("p");
  p.constraints.push_back({"lower", x - one(), false});
  if (infeasible) p.constraints.push_back({"upper", -x - one(), false});
  return p;
}

DesignOutcome cooked_up_outcome(const SolverOptions& o = {}) {
  return synthesize(testing::exact_cooked_up(), UncertaintyRegion::identity(3, 500), 1, {}, o);
}

TEST(Svec, RoundTrip) {
  Rng rng(1);
  for (int n = 1; n <= 6; ++n) {
    Matrix a = Matrix::Random(n, n);
    a = symmetrize(a);
    const Vector v = svec(a);
    EXPECT_EQ(v.size(), n * (n + 1) / 2);
    EXPECT_LE((smat(v, n) - a).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_NEAR(v.squaredNorm(), a.squaredNorm(), 1e-12);
  }
}

TEST(Lower, ScalarProblem) {
  SynthesisProblem p;
  p.N = 1;
  p.epsilon = 1e-6;
  p.vars.add_scalar("p");
  p.constraints.push_back({"p_pos", p.vars.expr("p"), true});
  const ConicProgram c = lower(p);
  EXPECT_EQ(c.num_vars, 1);
  ASSERT_EQ(c.blocks.size(), 1u);
  EXPECT_EQ(c.blocks[0].dim, 1);
  EXPECT_EQ(c.blocks[0].F0(0, 0), -1e-6);
}

TEST(Lower, Theorem1VariableCount) {
  const auto p = build_theorem1(testing::exact_cooked_up(), UncertaintyRegion::identity(3, 500));
  const ConicProgram c = lower(p);
  EXPECT_EQ(c.num_vars, 12);
  EXPECT_EQ(c.blocks.size(), p.constraints.size());
}

TEST(Lower, MatchesEvaluation) {
  Rng rng(2);
  Surrogate s = testing::exact_cooked_up();
  s.B[0] = Matrix::Random(3, 3);
  for (int theorem : {1, 2}) {
    const auto p = theorem == 1 ? build_theorem1(s, UncertaintyRegion::identity(3, 50))
                                : build_theorem2(s, UncertaintyRegion::identity(3, 50));
    const ConicProgram c = lower(p);
    for (int k = 0; k < 20; ++k) {
      Vector z(c.num_vars);
      for (int i = 0; i < c.num_vars; ++i) z(i) = rng.uniform(-3, 3);
      const Assignment a = p.vars.unpack(c.to_problem(z));
      for (size_t j = 0; j < p.constraints.size(); ++j) {
        const auto& con = p.constraints[j];
        const Matrix want = evaluate(p, con, a).value;
        const Matrix got = c.block_value(static_cast<int>(j), z) + c.blocks[j].shift * Matrix::Identity(want.rows(), want.cols());
        EXPECT_LE((got - want).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, want.cwiseAbs().maxCoeff()));
      }
      EXPECT_LE((c.from_problem(c.to_problem(z)) - z).cwiseAbs().maxCoeff(), 1e-14);
    }
  }
}

TEST(Solve, TriviallyFeasible) {
  const auto p = scalar_problem(false);
  const SolveReport r = solve(lower(p));
  ASSERT_EQ(r.status, SolveStatus::kFeasible) << r.message;
  EXPECT_GE(r.scalars(0), 1.0 - 1e-7);
  for (double e : r.min_eig) EXPECT_GE(e, -1e-7);
}

TEST(Solve, TriviallyInfeasible) {
  const SolveReport r = solve(lower(scalar_problem(true)));
  EXPECT_EQ(r.status, SolveStatus::kInfeasibleCertificate) << r.message;
}

TEST(Solve, CookedUpFeasibleAndFast) {
  const DesignOutcome o = cooked_up_outcome();
  ASSERT_EQ(o.solve.status, SolveStatus::kFeasible);
  EXPECT_LT(o.solve.wall_seconds, 10.0);
  for (double e : o.solve.min_eig) EXPECT_GE(e, -1e-7);
}

TEST(Solve, Deterministic) {
  const auto p = build_theorem1(testing::exact_cooked_up(), UncertaintyRegion::identity(3, 500));
  const ConicProgram c = lower(p);
  SolverOptions o;
  o.seed = 9;
  const SolveReport a = solve(c, o);
  const SolveReport b = solve(c, o);
  EXPECT_EQ(a.z, b.z);
  EXPECT_EQ(a.to_json(c).dump(), b.to_json(c).dump());
}

TEST(Verify, FeasibleReportPasses) {
  const DesignOutcome o = cooked_up_outcome();
  const VerifyReport v = verify(o.problem, o.problem.vars.unpack(o.solve.scalars));
  EXPECT_TRUE(v.pass);
}

TEST(Verify, PerturbedPFails) {
  const DesignOutcome o = cooked_up_outcome();
  Assignment a = o.problem.vars.unpack(o.solve.scalars);
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.at("P"));
  const Vector v = es.eigenvectors().col(0);
  // Smallest eigenvalue of P ends 2 epsilon below the required epsilon.
  a["P"] -= (es.eigenvalues()(0) + o.problem.epsilon) * v * v.transpose();
  const VerifyReport r = verify(o.problem, a);
  EXPECT_FALSE(r.pass);
}

TEST(Verify, SolverAgnostic) {
  SolverOptions a;
  SolverOptions b;
  b.seed = 123;
  b.center = false;
  b.variable_box = 1e5;
  const DesignOutcome oa = cooked_up_outcome(a);
  const DesignOutcome ob = cooked_up_outcome(b);
  ASSERT_EQ(oa.status, DesignStatus::kFeasible);
  ASSERT_EQ(ob.status, DesignStatus::kFeasible);
  EXPECT_TRUE(verify(oa.problem, oa.problem.vars.unpack(oa.solve.scalars)).pass);
  EXPECT_TRUE(verify(oa.problem, ob.problem.vars.unpack(ob.solve.scalars)).pass);
}

TEST(Export, SparseListing) {
  std::ostringstream out;
  export_sparse(lower(scalar_problem(true)), out);
  const std::string s = out.str();
  EXPECT_NE(s.find("vars 1"), std::string::npos);
  EXPECT_NE(s.find("blocks 2"), std::string::npos);
}

TEST(Options, JsonRoundTrip) {
  SolverOptions o;
  o.backend = SolverOptions::Backend::kExternal;
  o.external_command = "solver";
  o.variable_box = 5;
  o.seed = 4;
  const SolverOptions b = SolverOptions::from_json(o.to_json());
  EXPECT_EQ(b.to_json(), o.to_json());
}

}  // namespace
}  // namespace koopctl
