#include <gtest/gtest.h>

#include <cmath>

#include "koopctl/errors.h"
#include "koopctl/lifting.h"
#include "koopctl/rng.h"

namespace koopctl {
namespace {

Vector v2(double a, double b) { return Eigen::Vector2d(a, b); }

std::vector<Lifting> catalog() {
  return {identity_lifting(2), cooked_up_lifting(), cooked_up_xy_lifting(), pendulum_lifting(),
          Lifting::Builder(2).add_cos_minus_one(1).add_monomial({2, 1}).build()};
}

TEST(Lifting, PendulumAtOrigin) {
  const Vector z = pendulum_lifting().lift(v2(0, 0));
  ASSERT_EQ(z.size(), 4);
  EXPECT_EQ(z(0), 1.0);
  EXPECT_EQ(z.tail(3).norm(), 0.0);
}

TEST(Lifting, CookedUpValues) {
  const Vector z = cooked_up_lifting().lift(v2(1, 2));
  ASSERT_EQ(z.size(), 4);
  EXPECT_DOUBLE_EQ(z(0), 1.0);
  EXPECT_DOUBLE_EQ(z(1), 1.0);
  EXPECT_DOUBLE_EQ(z(2), 2.0);
  EXPECT_NEAR(z(3), 1.8, 1e-15);
  const Vector r = cooked_up_lifting().lift_reduced(v2(1, 2));
  EXPECT_NEAR((r - Eigen::Vector3d(1, 2, 1.8)).norm(), 0.0, 1e-15);
}

TEST(Lifting, CookedUpXyValues) {
  const Vector z = cooked_up_xy_lifting().lift(v2(2, 3));
  ASSERT_EQ(z.size(), 5);
  Vector want(5);
  want << 1, 2, 3, 2.2, 6;
  EXPECT_NEAR((z - want).norm(), 0.0, 1e-14);
}

TEST(Lifting, StructureHoldsEverywhere) {
  Rng rng(11);
  for (const Lifting& l : catalog()) {
    EXPECT_EQ(l.lift_reduced(Vector::Zero(2)).norm(), 0.0);
    for (int k = 0; k < 100; ++k) {
      const Vector x = v2(rng.uniform(-5, 5), rng.uniform(-5, 5));
      const Vector z = l.lift(x);
      EXPECT_EQ(z(0), 1.0);
      EXPECT_EQ(z(1), x(0));
      EXPECT_EQ(z(2), x(1));
      EXPECT_GE(l.lift_reduced(x).squaredNorm(), x.squaredNorm());
    }
  }
}

TEST(Lifting, GradientStructure) {
  Rng rng(12);
  for (const Lifting& l : catalog()) {
    const Vector x = v2(rng.uniform(-2, 2), rng.uniform(-2, 2));
    const Matrix G = l.lift_gradient(x);
    ASSERT_EQ(G.rows(), l.lifted_dim() + 1);
    EXPECT_EQ(G.row(0).norm(), 0.0);
    EXPECT_EQ((G.middleRows(1, 2) - Matrix::Identity(2, 2)).norm(), 0.0);
  }
}

TEST(Lifting, PendulumSinGradientAtOrigin) {
  const Matrix G = pendulum_lifting().lift_gradient(v2(0, 0));
  EXPECT_DOUBLE_EQ(G(3, 0), 1.0);
  EXPECT_DOUBLE_EQ(G(3, 1), 0.0);
}

TEST(Lifting, GradientMatchesCentralDifferences) {
  Rng rng(13);
  for (const Lifting& l : catalog()) {
    for (int k = 0; k < 100; ++k) {
      const Vector x = v2(rng.uniform(-3, 3), rng.uniform(-3, 3));
      const Matrix G = l.lift_gradient(x);
      for (int i = 0; i < G.rows(); ++i) {
        Vector fd(2);
        for (int j = 0; j < 2; ++j) {
          const double h = 1e-5 * (1.0 + std::abs(x(j)));
          Vector xp = x, xm = x;
          xp(j) += h;
          xm(j) -= h;
          fd(j) = (l.lift(xp)(i) - l.lift(xm)(i)) / (2 * h);
        }
        const Vector g = G.row(i).transpose();
        EXPECT_LE((g - fd).norm(), 1e-6 * std::max(1.0, g.norm())) << "row " << i;
      }
    }
  }
}

TEST(Lifting, CustomObservableUsesFiniteDifferences) {
  const Lifting l = Lifting::Builder(2)
                        .add_custom("x0 x1", [](const Vector& x) { return x(0) * x(1); })
                        .build();
  const Matrix G = l.lift_gradient(v2(2, -3));
  EXPECT_NEAR(G(3, 0), -3.0, 1e-6);
  EXPECT_NEAR(G(3, 1), 2.0, 1e-6);
}

TEST(Lifting, RejectsNonvanishingObservable) {
  EXPECT_THROW(Lifting::Builder(2).add_custom("one", [](const Vector&) { return 1.0; }).build(),
               ValidationError);
  EXPECT_THROW(Lifting::Builder(2).add_monomial({0, 0}).build(), ValidationError);
}

TEST(Lifting, DimensionMismatchThrows) {
  EXPECT_THROW(cooked_up_lifting().lift(Vector::Zero(3)), DimensionError);
}

TEST(Lifting, NonFiniteValueThrows) {
  const Lifting l =
      Lifting::Builder(1).add_custom("log", [](const Vector& x) { return std::log1p(x(0)); }).build();
  EXPECT_THROW(l.lift(Vector::Constant(1, -1.0)), NumericalError);
}

TEST(Lifting, DescriptorRoundTrip) {
  for (const Lifting& l : catalog()) {
    const Lifting back = Lifting::from_descriptor(l.descriptor());
    EXPECT_EQ(back.descriptor(), l.descriptor());
    const Vector x = v2(0.7, -1.3);
    EXPECT_EQ((back.lift(x) - l.lift(x)).norm(), 0.0);
  }
}

TEST(Lifting, DescriptorRejectsBadStructure) {
  Json j = cooked_up_lifting().descriptor();
  std::swap(j["observables"][1], j["observables"][2]);
  EXPECT_THROW(Lifting::from_descriptor(j), ValidationError);
}

TEST(Lipschitz, IdentityIsOne) {
  EXPECT_DOUBLE_EQ(estimate_lipschitz(identity_lifting(2), Box::uniform(2, -1, 1), 200, 1), 1.0);
}

TEST(Lipschitz, QuadraticApproachesSupremum) {
  const Lifting l = Lifting::Builder(1).add_monomial({2}).build();
  const Box box = Box::uniform(1, -5, 5);
  const double sup = std::sqrt(101.0);
  const double few = estimate_lipschitz(l, box, 50, 4);
  const double many = estimate_lipschitz(l, box, 5000, 4);
  EXPECT_LE(few, many);
  EXPECT_LE(many, sup + 1e-9);
  EXPECT_GT(many, 0.99 * sup);
}

TEST(Lipschitz, AtLeastOneAndMonotoneInSamples) {
  for (const Lifting& l : catalog()) {
    double prev = 0.0;
    for (int s : {2, 20, 200}) {
      const double e = estimate_lipschitz(l, Box::uniform(2, -2, 2), s, 9);
      EXPECT_GE(e, 1.0 - 1e-12);
      EXPECT_GE(e, prev);
      prev = e;
    }
  }
}

TEST(Lipschitz, DegenerateInputsThrow) {
  EXPECT_THROW(estimate_lipschitz(identity_lifting(1), Box::uniform(1, 1, 1), 10), ValidationError);
  EXPECT_THROW(estimate_lipschitz(identity_lifting(1), Box::uniform(1, -1, 1), 1), ValidationError);
}

}  // namespace
}  // namespace koopctl
