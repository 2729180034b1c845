#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.h"
#include "koopctl/edmd.h"
#include "koopctl/errors.h"
#include "koopctl/plants.h"
#include "koopctl/rng.h"

namespace koopctl {
namespace {

Matrix random_matrix(Rng& rng, int r, int c) {
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.uniform(-1, 1);
  return m;
}

// Theta = Y X^T (X X^T)^{-1} from the normal equations.
Matrix normal_equations(const Matrix& X, const Matrix& Y) {
  return (X * X.transpose()).ldlt().solve(X * Y.transpose()).transpose();
}

SampleSet scalar_set(const std::vector<double>& x, const std::vector<double>& xdot) {
  SampleSet s;
  s.n = 1;
  s.m = 1;
  s.state_box = Box::uniform(1, -5, 5);
  s.input_box = Box::uniform(1, -1, 1);
  for (int ch = 0; ch < 2; ++ch) {
    SampleBatch b;
    b.channel = ch;
    b.amplitude = ch == 0 ? 0.0 : 1.0;
    b.input = Vector::Constant(1, b.amplitude);
    b.states = Eigen::Map<const Matrix>(x.data(), 1, static_cast<Eigen::Index>(x.size()));
    b.derivatives = Eigen::Map<const Matrix>(xdot.data(), 1, static_cast<Eigen::Index>(xdot.size()));
    if (ch == 1) b.derivatives.array() += 1.0;
    s.batches.push_back(b);
  }
  return s;
}

TEST(DataMatrices, ScalarIdentityLifting) {
  const DataMatrices d = build_data_matrices(identity_lifting(1), scalar_set({2.0}, {-2.0}));
  EXPECT_EQ(d.x_drift(0, 0), 2.0);
  EXPECT_EQ(d.y_drift(0, 0), -2.0);
  EXPECT_EQ(d.x_input[0](0, 0), 1.0);
}

TEST(DataMatrices, ChainRuleOnCookedUpObservable) {
  SampleSet s = collect_samples(make_example(ExampleId::kCookedUp), 1, 1);
  s.batches[0].states.col(0) = Eigen::Vector2d(1, 2);
  s.batches[0].derivatives.col(0) = Eigen::Vector2d(-2, -1);
  const DataMatrices d = build_data_matrices(cooked_up_lifting(), s);
  EXPECT_NEAR((d.y_drift.col(0) - Eigen::Vector3d(-2, -1, -0.2)).norm(), 0.0, 1e-15);
}

TEST(DataMatrices, ConstantRowAndColumnLayout) {
  const Plant p = make_example(ExampleId::kPendulum);
  const Lifting l = pendulum_lifting();
  const SampleSet s = collect_samples(p, 30, 2);
  const DataMatrices d = build_data_matrices(l, s);
  ASSERT_EQ(d.x_input.size(), 1u);
  EXPECT_EQ((d.x_input[0].row(0).array() - 1.0).abs().maxCoeff(), 0.0);
  const auto& b = s.batches[1];
  for (int j = 0; j < b.count(); ++j) {
    const Vector full = l.lift_gradient(b.states.col(j)) * b.derivatives.col(j);
    EXPECT_NEAR((d.y_input[0].col(j) - full.tail(3)).norm(), 0.0, 1e-14);
  }
}

TEST(DataMatrices, MissingBatchThrows) {
  SampleSet s = collect_samples(make_example(ExampleId::kCookedUp), 3, 1);
  s.batches.pop_back();
  EXPECT_THROW(build_data_matrices(cooked_up_lifting(), s), ValidationError);
}

TEST(DataMatrices, NaNThrows) {
  SampleSet s = collect_samples(make_example(ExampleId::kCookedUp), 3, 1);
  s.batches[0].derivatives(0, 0) = std::nan("");
  EXPECT_THROW(build_data_matrices(cooked_up_lifting(), s), NumericalError);
}

TEST(Fit, CookedUpRecoversLiftedModel) {
  const SampleSet s = collect_samples(make_example(ExampleId::kCookedUp), 5000, 1);
  const Surrogate got = fit(build_data_matrices(cooked_up_lifting(), s)).surrogate;
  const Surrogate want = testing::exact_cooked_up();
  EXPECT_LE((got.A - want.A).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((got.B0 - want.B0).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(got.B[0].cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Fit, ScalarLinearPlantIsExact) {
  const Surrogate s = fit(build_data_matrices(identity_lifting(1), scalar_set({0.5, -1.5}, {-0.5, 1.5}))).surrogate;
  EXPECT_NEAR(s.A(0, 0), -1.0, 1e-15);
  EXPECT_NEAR(s.B0(0, 0), 1.0, 1e-15);
}

TEST(Fit, MatchesNormalEquationsOracle) {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const int N = 1 + static_cast<int>(rng.next() % 3);
    const int d = N + 1 + static_cast<int>(rng.next() % (6 - N));
    DataMatrices dm;
    dm.N = N;
    dm.m = 1;
    dm.x_drift = random_matrix(rng, N, d);
    dm.y_drift = random_matrix(rng, N, d);
    Matrix xi = random_matrix(rng, N + 1, d);
    xi.row(0).setOnes();
    dm.x_input = {xi};
    dm.y_input = {random_matrix(rng, N, d)};
    dm.amplitude = {1.0};
    const Surrogate s = fit(dm).surrogate;
    const Matrix A = normal_equations(dm.x_drift, dm.y_drift);
    const Matrix T = normal_equations(xi, dm.y_input[0]);
    const Matrix B = T.rightCols(N) - A;
    EXPECT_LE((s.A - A).norm(), 1e-9 * std::max(1.0, A.norm()));
    EXPECT_LE((s.B0 - T.col(0)).norm(), 1e-9 * std::max(1.0, T.norm()));
    EXPECT_LE((s.B[0] - B).norm(), 1e-9 * std::max(1.0, B.norm()));
  }
}

TEST(Fit, ResidualOrthogonalToRowSpace) {
  const SampleSet s = collect_samples(make_example(ExampleId::kPendulum), 400, 3, 0.05);
  const DataMatrices d = build_data_matrices(pendulum_lifting(), s);
  const Surrogate f = fit(d).surrogate;
  const Matrix R0 = d.y_drift - f.A * d.x_drift;
  EXPECT_LE((R0 * d.x_drift.transpose()).norm(), 1e-8 * d.y_drift.norm() * d.x_drift.norm());
  Matrix theta(f.N(), f.N() + 1);
  theta << f.B0 * d.amplitude[0], (f.B[0] * d.amplitude[0] + f.A);
  const Matrix R1 = d.y_input[0] - theta * d.x_input[0];
  EXPECT_LE((R1 * d.x_input[0].transpose()).norm(), 1e-8 * d.y_input[0].norm() * d.x_input[0].norm());
}

TEST(Fit, GeneratorLayout) {
  const Surrogate s = testing::exact_cooked_up();
  const Matrix Ld = s.generator_drift();
  const Matrix Li = s.generator_input(0);
  EXPECT_EQ(Ld.rows(), 4);
  EXPECT_EQ(Ld.row(0).norm(), 0.0);
  EXPECT_EQ(Ld.col(0).norm(), 0.0);
  EXPECT_EQ(Li.row(0).norm(), 0.0);
}

TEST(Fit, ExactDictionaryResidualAtRoundoff) {
  for (int d : {50, 500, 5000}) {
    const SampleSet s = collect_samples(make_example(ExampleId::kCookedUp), d, 1);
    const FitReport r = fit(build_data_matrices(cooked_up_lifting(), s));
    for (const auto& b : r.batches) EXPECT_LE(b.residual_fro / std::sqrt(double(d)), 1e-12) << d;
  }
}

TEST(Fit, RankDeficiencyWarns) {
  const Lifting dup = Lifting::Builder(1).add_custom("2x", [](const Vector& x) { return 2 * x(0); }).build();
  const FitReport r2 = fit(build_data_matrices(dup, scalar_set({0.5, -1.0, 2.0}, {1.0, 0.0, -1.0})));
  EXPECT_FALSE(r2.warnings.empty());
}

TEST(Surrogate, Predict) {
  const Surrogate s = testing::exact_cooked_up();
  EXPECT_EQ(s.predict(Vector::Zero(3), Vector::Zero(1)).norm(), 0.0);
  EXPECT_NEAR((s.predict(Eigen::Vector3d(1, 2, 1.8), Vector::Zero(1)) - Eigen::Vector3d(-2, 1, 1.8)).norm(), 0.0,
              1e-14);
  Surrogate b = s;
  b.B[0] = Matrix::Random(3, 3);
  const Vector z = Eigen::Vector3d(0.3, -0.2, 0.9);
  const Vector u = Vector::Constant(1, 0.7);
  EXPECT_NEAR((b.predict(z, u) - (b.A * z + b.B0 * u + 0.7 * b.B[0] * z)).norm(), 0.0, 1e-14);
}

TEST(Surrogate, JsonRoundTrip) {
  const Surrogate s = testing::exact_cooked_up();
  const Surrogate t = Surrogate::from_json(s.to_json());
  EXPECT_EQ(t.A, s.A);
  EXPECT_EQ(t.B0, s.B0);
  EXPECT_EQ(t.B[0], s.B[0]);
  EXPECT_EQ(t.c_r, s.c_r);
  EXPECT_EQ(t.lifting, s.lifting);
}

TEST(Surrogate, ErrorBoundValidation) {
  EXPECT_THROW(testing::exact_cooked_up().with_error_bound(0.0, 0.05), ValidationError);
  EXPECT_THROW(testing::exact_cooked_up().with_error_bound(0.1, 1.0), ValidationError);
}

}  // namespace
}  // namespace koopctl
