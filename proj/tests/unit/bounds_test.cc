#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.h"
#include "koopctl/bounds.h"
#include "koopctl/linalg.h"
#include "koopctl/plants.h"

namespace koopctl {
namespace {

DataRequirement cooked(double c_r, double delta, QuadratureSpec q = {}) {
  return compute_d0(make_example(ExampleId::kCookedUp), cooked_up_lifting(), c_r, delta, q);
}

double max_rel_change(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1e-300, a.cwiseAbs().maxCoeff());
}

TEST(D0, CookedUpOrderOfMagnitude) {
  const DataRequirement r = cooked(0.1, 0.05);
  EXPECT_LE(std::abs(r.log10_d0 - std::log10(6.9e17)), 1.0) << r.d0;
  EXPECT_NEAR(r.delta_tilde, 0.05 / 6.0, 1e-16);
  for (const auto& t : r.terms) EXPECT_GT(t.c_r_k, 0.0);
  EXPECT_GE(r.d0, 1.0);
}

TEST(D0, GramMatrixPositiveDefinite) {
  const DataRequirement r = cooked(0.1, 0.05);
  EXPECT_LE((r.C - r.C.transpose()).norm(), 1e-14 * r.C.norm());
  EXPECT_GT(min_eigenvalue(r.C), 0.0);
}

TEST(D0, HalvingDeltaAtLeastDoubles) {
  const double a = cooked(0.1, 0.05).d0_real;
  const double b = cooked(0.1, 0.025).d0_real;
  EXPECT_GE(b, 2.0 * a * (1.0 - 1e-12));
}

TEST(D0, MonotoneInParameters) {
  double prev_c = std::numeric_limits<double>::infinity();
  for (double c_r : {0.05, 0.1, 0.2, 0.5}) {
    double prev_d = std::numeric_limits<double>::infinity();
    for (double delta : {0.01, 0.05, 0.1, 0.3}) {
      const double d0 = cooked(c_r, delta).d0_real;
      EXPECT_LE(d0, prev_d);
      prev_d = d0;
    }
    const double d0 = cooked(c_r, 0.05).d0_real;
    EXPECT_LE(d0, prev_c);
    prev_c = d0;
  }
}

TEST(D0, MonteCarloAgreesWithGrid) {
  QuadratureSpec mc;
  mc.kind = QuadratureSpec::Kind::kMonteCarlo;
  mc.samples = 1000000;
  mc.seed = 5;
  const DataRequirement g = cooked(0.1, 0.05);
  const DataRequirement m = cooked(0.1, 0.05, mc);
  EXPECT_LE(std::abs(m.d0_real - g.d0_real) / g.d0_real, 0.05);
  EXPECT_GT(m.max_standard_error, 0.0);
}

TEST(D0, GridRefinementStable) {
  QuadratureSpec fine;
  fine.points_per_axis = 202;
  const DataRequirement a = cooked(0.1, 0.05);
  const DataRequirement b = cooked(0.1, 0.05, fine);
  EXPECT_LT(max_rel_change(a.sigma_C, b.sigma_C), 0.01);
  for (size_t k = 0; k < a.terms.size(); ++k) {
    EXPECT_LT(max_rel_change(a.terms[k].sigma_A, b.terms[k].sigma_A), 0.01);
  }
}

TEST(D0, ReportsBothRepresentations) {
  const DataRequirement r = cooked(0.1, 0.05);
  ASSERT_TRUE(r.d0_exact.has_value());
  EXPECT_EQ(static_cast<double>(*r.d0_exact), r.d0);
  const Json j = r.to_json();
  EXPECT_TRUE(j.contains("d0"));
  EXPECT_TRUE(j.contains("log10_d0"));
  EXPECT_TRUE(j.contains("per_k"));
  EXPECT_TRUE(j.contains("quadrature"));
  const DataRequirement tiny = cooked(1e-6, 1e-6);
  EXPECT_TRUE(tiny.overflow);
  EXPECT_FALSE(tiny.d0_exact.has_value());
  EXPECT_TRUE(std::isfinite(tiny.log10_d0));
}

TEST(RemainderBound, FormulaAndHomogeneity) {
  const Surrogate s = testing::exact_cooked_up(0.1);
  EXPECT_EQ(remainder_bound(s, Vector::Zero(3), Vector::Zero(1)), 0.0);
  EXPECT_NEAR(remainder_bound(s, Eigen::Vector3d(2, 0, 0), Vector::Constant(1, 1.0)), 0.3, 1e-15);
  const Vector z = Eigen::Vector3d(0.3, -1.2, 2.0);
  const Vector u = Vector::Constant(1, -0.4);
  EXPECT_NEAR(remainder_bound(s, 3.5 * z, 3.5 * u), 3.5 * remainder_bound(s, z, u), 1e-14);
}

}  // namespace
}  // namespace koopctl
