#pragma once

#include "koopctl/linalg.h"

namespace koopctl {

/// Ellipsoidal set {v : [v;1]^T [[Q,S],[S^T,R]] [v;1] >= 0} with Q < 0,
/// R > 0, plus the blocks of the inverse matrix.
class UncertaintyRegion {
 public:
  struct Membership {
    bool inside = false;
    double margin = 0.0;
  };

  /// Validates signs and caches the inverse blocks.
  UncertaintyRegion(Matrix Q, Vector S, double R);

  /// Q = -I, S = 0.
  static UncertaintyRegion identity(int N, double R);

  int N() const { return static_cast<int>(Q_.rows()); }
  const Matrix& Q() const { return Q_; }
  const Vector& S() const { return S_; }
  double R() const { return R_; }
  const Matrix& Q_tilde() const { return Qt_; }
  const Vector& S_tilde() const { return St_; }
  double R_tilde() const { return Rt_; }
  /// Inverse of Q_tilde, symmetrized.
  const Matrix& Q_tilde_inverse() const { return Qt_inv_; }
  /// Inverse of Q, symmetrized.
  const Matrix& Q_inverse() const { return Q_inv_; }

  /// [[Q,S],[S^T,R]] and its cached inverse.
  Matrix block() const;
  Matrix inverse_block() const;

  Membership membership(const Vector& v) const;

  Json to_json() const;
  static UncertaintyRegion from_json(const Json& j);

 private:
  Matrix Q_;
  Vector S_;
  double R_;
  Matrix Qt_;
  Vector St_;
  double Rt_;
  Matrix Qt_inv_;
  Matrix Q_inv_;
};

/// Blocks of a multiplier or its inverse: [[Q, S],[S^T, R]] with Q Nm x Nm,
/// S Nm x m, R m x m.
struct MultiplierBlocks {
  Matrix Q;
  Matrix S;
  Matrix R;
  Matrix full() const;
};

/// Pi_Delta(Lambda_tilde) = [[Lt (x) Q, Lt (x) S],[Lt (x) S^T, Lt (x) R]].
MultiplierBlocks multiplier(const UncertaintyRegion& region, const Matrix& lambda_tilde);

/// Closed-form inverse of multiplier(region, Lambda^{-1}):
/// [[Lambda (x) Qt, Lambda (x) St],[Lambda (x) St^T, Lambda (x) Rt]].
MultiplierBlocks multiplier_inverse(const UncertaintyRegion& region, const Matrix& lambda);

/// Orthogonal permutation T = [I_m (x) [I_N 0]; I_m (x) [0 1]].
Matrix permutation_T(int N, int m);

/// True iff delta (Nm x m) equals I_m (x) v for some v in the region.
bool kron_delta_membership(const UncertaintyRegion& region, const Matrix& delta);

}  // namespace koopctl
