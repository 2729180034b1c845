#pragma once

#include <string>
#include <vector>

#include "koopctl/lifting.h"
#include "koopctl/linalg.h"
#include "koopctl/plants.h"

namespace koopctl {

/// Regression data. x_drift is N x d0 (constant row removed), x_input[i]
/// is (N+1) x d_i, y_* are N x d.
struct DataMatrices {
  int N = 0;
  int m = 0;
  Matrix x_drift;
  Matrix y_drift;
  std::vector<Matrix> x_input;
  std::vector<Matrix> y_input;
  std::vector<double> amplitude;  // alpha_i of the batch ubar = alpha_i e_i
};

DataMatrices build_data_matrices(const Lifting& lifting, const SampleSet& samples);

/// Bilinear lifted model zdot = A z + B0 u + sum_i u_i B_i z (+ remainder).
struct Surrogate {
  Matrix A;               // N x N
  Matrix B0;              // N x m
  std::vector<Matrix> B;  // m matrices N x N
  double c_r = 0.0;
  double delta = 0.0;
  Json lifting;

  int N() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B0.cols()); }
  /// [B_1 .. B_m], N x Nm.
  Matrix B_tilde() const;
  Vector predict(const Vector& z, const Vector& u) const;
  /// Full generator compressions in the (N+1)-dim dictionary layout:
  /// drift [[0, 0], [0, A]], input i [[0, 0], [B0_i, A + B_i]].
  Matrix generator_drift() const;
  Matrix generator_input(int i) const;
  Surrogate with_error_bound(double c_r, double delta) const;

  Json to_json() const;
  static Surrogate from_json(const Json& j);
};

struct BatchFit {
  int channel = 0;
  double residual_fro = 0.0;
  int rank = 0;
  int full_rank = 0;
  double condition = 0.0;
};

struct FitReport {
  Surrogate surrogate;
  std::vector<BatchFit> batches;
  std::vector<std::string> warnings;
  Json to_json() const;
};

/// Least squares Theta = Y X^+ per batch. For a batch at ubar = alpha e_i,
/// B_i = (Bhat_i - A) / alpha and B0_i = b_i / alpha.
FitReport fit(const DataMatrices& data, double rank_cutoff = 1e-12);

}  // namespace koopctl
