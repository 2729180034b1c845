#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "koopctl/edmd.h"
#include "koopctl/linalg.h"
#include "koopctl/uncertainty.h"

namespace koopctl {

/// Matrix-valued affine function C + sum_k z_k M_k of the scalar decision
/// vector z. Only indices present in `coeffs` contribute.
class AffineMatrix {
 public:
  AffineMatrix() = default;
  AffineMatrix(Eigen::Index rows, Eigen::Index cols);
  static AffineMatrix constant(const Matrix& c);

  Eigen::Index rows() const { return constant_.rows(); }
  Eigen::Index cols() const { return constant_.cols(); }
  const Matrix& constant_term() const { return constant_; }
  const std::map<int, Matrix>& coeffs() const { return coeffs_; }
  void add_coeff(int index, const Matrix& m);

  Matrix evaluate(const Vector& z) const;
  AffineMatrix transpose() const;

  AffineMatrix operator+(const AffineMatrix& o) const;
  AffineMatrix operator-(const AffineMatrix& o) const;
  AffineMatrix operator-() const;
  AffineMatrix operator*(double s) const;

  friend AffineMatrix operator*(const Matrix& left, const AffineMatrix& a);
  friend AffineMatrix operator*(const AffineMatrix& a, const Matrix& right);

 private:
  Matrix constant_;
  std::map<int, Matrix> coeffs_;
};

AffineMatrix kron(const AffineMatrix& a, const Matrix& b);
AffineMatrix kron(const Matrix& a, const AffineMatrix& b);
AffineMatrix hcat(const std::vector<AffineMatrix>& parts);
AffineMatrix vcat(const std::vector<AffineMatrix>& parts);

/// Symmetric block matrix from its lower-triangular blocks (i >= j). Missing
/// blocks are zero; the upper part mirrors the lower part.
AffineMatrix assemble_symmetric(const std::vector<int>& sizes,
                                const std::map<std::pair<int, int>, AffineMatrix>& lower);

/// Matrix-shaped decision variable mapped onto scalar indices.
struct MatrixVariable {
  std::string name;
  int rows = 0;
  int cols = 0;
  bool symmetric = false;
  std::vector<int> index;  // row-major, entry (i,j) -> scalar index
  int scalar_index(int i, int j) const { return index[static_cast<size_t>(i * cols + j)]; }
};

using Assignment = std::map<std::string, Matrix>;

class VariableSet {
 public:
  /// Symmetric variables own one scalar per upper-triangle entry.
  const MatrixVariable& add_symmetric(const std::string& name, int n);
  const MatrixVariable& add_full(const std::string& name, int rows, int cols);
  const MatrixVariable& add_scalar(const std::string& name);

  bool contains(const std::string& name) const;
  const MatrixVariable& get(const std::string& name) const;
  const std::vector<MatrixVariable>& variables() const { return vars_; }
  int num_scalars() const { return count_; }

  /// Affine expression equal to the variable itself.
  AffineMatrix expr(const std::string& name) const;

  /// Scalar vector from named values; throws on a missing variable.
  Vector pack(const Assignment& a) const;
  Assignment unpack(const Vector& z) const;
  Matrix value(const std::string& name, const Vector& z) const;

  Json manifest() const;

 private:
  std::vector<MatrixVariable> vars_;
  int count_ = 0;
};

struct LmiConstraint {
  std::string name;
  AffineMatrix expr;  // symmetric
  bool strict = false;  // required >= epsilon I instead of >= 0
};

struct SynthesisProblem {
  int theorem = 1;
  int N = 0;
  int m = 0;
  double epsilon = 0.0;  // effective strictness margin
  VariableSet vars;
  std::vector<LmiConstraint> constraints;
  Vector objective;  // minimize objective . z; empty for feasibility
  std::vector<std::string> notes;

  const LmiConstraint& constraint(const std::string& name) const;
  bool has_constraint(const std::string& name) const;
  Json manifest() const;
};

struct SynthesisOptions {
  double epsilon = 1e-6;  // before scaling by the data magnitude
  bool include_invariance = true;
  /// trace(P) <= trace_cap when positive.
  double trace_cap = 0.0;
  /// Theorem 2 only: drop L_w from the problem (L_w = 0).
  bool freeze_Lw = false;
  /// Adds t with P >= t I and minimizes -t.
  bool maximize_min_eig_P = false;
};

/// epsilon * max(1, max |entry| of A, B0, B_i).
double effective_epsilon(const Surrogate& s, double epsilon);

SynthesisProblem build_theorem1(const Surrogate& s, const UncertaintyRegion& region,
                                const SynthesisOptions& opts = {});
SynthesisProblem build_theorem2(const Surrogate& s, const UncertaintyRegion& region,
                                const SynthesisOptions& opts = {});

/// The (P, nu) invariance inequality tying the sublevel set of P^{-1} to
/// the region.
AffineMatrix invariance_lmi(const VariableSet& vars, const UncertaintyRegion& region);

struct Evaluation {
  Matrix value;
  double min_eig = 0.0;
};

Evaluation evaluate(const AffineMatrix& expr, const Vector& z);
Evaluation evaluate(const SynthesisProblem& p, const LmiConstraint& c, const Assignment& a);

}  // namespace koopctl
