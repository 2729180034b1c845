#include "koopctl/uncertainty.h"

#include <cmath>

#include "koopctl/errors.h"

namespace koopctl {

UncertaintyRegion::UncertaintyRegion(Matrix Q, Vector S, double R)
    : Q_(std::move(Q)), S_(std::move(S)), R_(R) {
  const int n = static_cast<int>(Q_.rows());
  if (Q_.cols() != n || S_.size() != n || n < 1) {
    throw DimensionError("uncertainty region: Q must be N x N and S length N");
  }
  if (!Q_.allFinite() || !S_.allFinite() || !std::isfinite(R_)) {
    throw ValidationError("uncertainty region: non-finite entries");
  }
  if ((Q_ - Q_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + Q_.cwiseAbs().maxCoeff())) {
    throw ValidationError("uncertainty region: Q is not symmetric");
  }
  Q_ = symmetrize(Q_);
  if (!(max_eigenvalue(Q_) < 0.0)) throw ValidationError("uncertainty region: Q must be negative definite");
  if (!(R_ > 0.0)) throw ValidationError("uncertainty region: R must be positive");

  const Matrix M = block();
  Eigen::FullPivLU<Matrix> lu(M);
  if (!lu.isInvertible()) throw NumericalError("uncertainty region: block matrix is singular");
  const Matrix Minv = symmetrize(lu.inverse());
  const double err = (M * Minv - Matrix::Identity(n + 1, n + 1)).cwiseAbs().maxCoeff();
  if (err > 1e-10) throw NumericalError("uncertainty region: inverse blocks inaccurate");
  Qt_ = Minv.topLeftCorner(n, n);
  St_ = Minv.topRightCorner(n, 1);
  Rt_ = Minv(n, n);
  Qt_inv_ = sym_inverse(Qt_);
  Q_inv_ = sym_inverse(Q_);
}

UncertaintyRegion UncertaintyRegion::identity(int N, double R) {
  return UncertaintyRegion(-Matrix::Identity(N, N), Vector::Zero(N), R);
}

Matrix UncertaintyRegion::block() const {
  const int n = N();
  Matrix M(n + 1, n + 1);
  M.topLeftCorner(n, n) = Q_;
  M.topRightCorner(n, 1) = S_;
  M.bottomLeftCorner(1, n) = S_.transpose();
  M(n, n) = R_;
  return M;
}

Matrix UncertaintyRegion::inverse_block() const {
  const int n = N();
  Matrix M(n + 1, n + 1);
  M.topLeftCorner(n, n) = Qt_;
  M.topRightCorner(n, 1) = St_;
  M.bottomLeftCorner(1, n) = St_.transpose();
  M(n, n) = Rt_;
  return M;
}

UncertaintyRegion::Membership UncertaintyRegion::membership(const Vector& v) const {
  if (v.size() != N()) throw DimensionError("membership: vector length");
  const double margin = v.dot(Q_ * v) + 2.0 * S_.dot(v) + R_;
  return {margin >= 0.0, margin};
}

Json UncertaintyRegion::to_json() const {
  return {{"Qz", matrix_to_json(Q_)}, {"Sz", vector_to_json(S_)}, {"Rz", R_}};
}

UncertaintyRegion UncertaintyRegion::from_json(const Json& j) {
  return UncertaintyRegion(matrix_from_json(j.at("Qz")), vector_from_json(j.at("Sz")),
                           j.at("Rz").get<double>());
}

Matrix MultiplierBlocks::full() const {
  const auto a = Q.rows();
  const auto b = R.rows();
  Matrix M(a + b, a + b);
  M.topLeftCorner(a, a) = Q;
  M.topRightCorner(a, b) = S;
  M.bottomLeftCorner(b, a) = S.transpose();
  M.bottomRightCorner(b, b) = R;
  return M;
}

namespace {

void check_square(const Matrix& l, const char* what) {
  if (l.rows() != l.cols() || l.rows() < 1) throw DimensionError(what);
}

}  // namespace

MultiplierBlocks multiplier(const UncertaintyRegion& region, const Matrix& lambda_tilde) {
  check_square(lambda_tilde, "multiplier: Lambda_tilde must be square");
  const Matrix S = region.S();
  return {kron(lambda_tilde, region.Q()), kron(lambda_tilde, S),
          kron(lambda_tilde, Matrix::Constant(1, 1, region.R()))};
}

MultiplierBlocks multiplier_inverse(const UncertaintyRegion& region, const Matrix& lambda) {
  check_square(lambda, "multiplier_inverse: Lambda must be square");
  Eigen::FullPivLU<Matrix> lu(lambda);
  if (!lu.isInvertible()) throw NumericalError("multiplier_inverse: Lambda is singular");
  const Matrix St = region.S_tilde();
  return {kron(lambda, region.Q_tilde()), kron(lambda, St),
          kron(lambda, Matrix::Constant(1, 1, region.R_tilde()))};
}

Matrix permutation_T(int N, int m) {
  const Matrix Im = Matrix::Identity(m, m);
  Matrix top = Matrix::Zero(N, N + 1);
  top.leftCols(N).setIdentity();
  Matrix bottom = Matrix::Zero(1, N + 1);
  bottom(0, N) = 1.0;
  Matrix T(m * (N + 1), m * (N + 1));
  T.topRows(N * m) = kron(Im, top);
  T.bottomRows(m) = kron(Im, bottom);
  return T;
}

bool kron_delta_membership(const UncertaintyRegion& region, const Matrix& delta) {
  const int N = region.N();
  const auto m = delta.cols();
  if (m < 1 || delta.rows() != N * m) return false;
  const Vector v = delta.block(0, 0, N, 1);
  const double tol = 1e-12 * (1.0 + v.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const Matrix blk = delta.block(i * N, j, N, 1);
      const double dev = i == j ? (blk - v).cwiseAbs().maxCoeff() : blk.cwiseAbs().maxCoeff();
      if (dev > tol) return false;
    }
  }
  return region.membership(v).inside;
}

}  // namespace koopctl
