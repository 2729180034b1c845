#pragma once

#include <Eigen/Dense>
#include <json.hpp>

namespace koopctl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Json = nlohmann::json;

/// Kronecker product a ⊗ b.
Matrix kron(const Matrix& a, const Matrix& b);

/// Plain triple-loop product with ascending summation order. Used where two
/// assemblies must agree bit for bit regardless of operand shapes.
Matrix ordered_product(const Matrix& a, const Matrix& b);

Matrix symmetrize(const Matrix& m);

/// Smallest/largest eigenvalue of the symmetric part of m.
double min_eigenvalue(const Matrix& m);
double max_eigenvalue(const Matrix& m);

double spectral_norm(const Matrix& m);

/// Inverse of a symmetric positive definite matrix, symmetrized.
Matrix spd_inverse(const Matrix& m);

/// Inverse of a symmetric (possibly indefinite) matrix, symmetrized.
Matrix sym_inverse(const Matrix& m);

bool all_finite(const Matrix& m);

struct PseudoInverse {
  Matrix value;
  int rank = 0;
  double sigma_max = 0.0;
  double sigma_min = 0.0;  // smallest singular value (kept or not)
  double condition = 0.0;  // sigma_max / sigma_min, inf if sigma_min == 0
};

/// Moore-Penrose inverse via SVD, singular values below
/// rel_cutoff * sigma_max are treated as zero.
PseudoInverse pseudo_inverse(const Matrix& m, double rel_cutoff = 1e-12);

/// Row-major JSON encoding {"rows", "cols", "data"}.
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

}  // namespace koopctl
