#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "koopctl/ipm.h"
#include "koopctl/lmi.h"

namespace koopctl {

/// Packs the upper triangle row by row, off-diagonal entries times sqrt(2).
Vector svec(const Matrix& sym);
Matrix smat(const Vector& v, int n);

/// F0 + sum_i z_i F_i >= 0. For strict constraints the margin epsilon is
/// already subtracted from F0 (recorded in `shift`).
struct PsdBlock {
  std::string name;
  int dim = 0;
  Matrix F0;
  std::vector<std::pair<int, Matrix>> F;
  double shift = 0.0;
};

/// Scalarized program over z. Problem scalars relate to z by s_k = scale_k z_k
/// (scale 1/sqrt(2) for off-diagonal entries of symmetric variables).
struct ConicProgram {
  int num_vars = 0;
  std::vector<PsdBlock> blocks;
  Vector c;  // minimize c^T z; zero for feasibility
  std::vector<double> scale;
  std::vector<std::string> labels;

  Vector to_problem(const Vector& z) const;
  Vector from_problem(const Vector& s) const;
  Matrix block_value(int j, const Vector& z) const;
  bool has_objective() const { return c.size() > 0 && c.cwiseAbs().maxCoeff() > 0.0; }
};

ConicProgram lower(const SynthesisProblem& problem);

/// Triplet listing: header lines, then "block row col value" for F0 and
/// "var block row col value" for F_i (upper triangle, 1-based).
void export_sparse(const ConicProgram& program, std::ostream& out);

enum class SolveStatus { kFeasible, kInfeasibleCertificate, kNumericalFailure, kIterationLimit };
std::string to_string(SolveStatus s);

struct SolverOptions {
  enum class Backend { kReference, kExternal };
  Backend backend = Backend::kReference;
  double tol_feasibility = 1e-8;
  double tol_gap = 1e-8;
  int max_iterations = 200;
  /// Upper bound on the feasibility margin t in phase 1.
  double margin_cap = 1.0;
  /// |z_i| <= variable_box for every scalar.
  double variable_box = 1e4;
  /// After phase 1, move to the analytic center of the feasible set
  /// (feasibility programs only).
  bool center = true;
  /// Nonzero seeds perturb the starting point deterministically.
  std::uint64_t seed = 0;
  /// External backend: command receiving "<input.dat-s> <output>" that
  /// writes the solution vector of an SDPA sparse problem.
  std::string external_command;
  std::string work_dir = "";

  Json to_json() const;
  static SolverOptions from_json(const Json& j);
};

struct SolveReport {
  SolveStatus status = SolveStatus::kNumericalFailure;
  Vector z;                      // program variables
  Vector scalars;                // problem scalars (s = scale . z)
  std::vector<double> min_eig;   // per block, F0 + sum z F (margin folded in)
  double margin = 0.0;           // phase-1 optimum t*
  double margin_bound = 0.0;     // upper bound on t* from the paired problem
  int iterations = 0;
  double wall_seconds = 0.0;  // not serialized, keeps artifacts reproducible
  std::string message;

  Json to_json(const ConicProgram& p) const;
};

SolveReport solve(const ConicProgram& program, const SolverOptions& opts = {});

struct ConstraintMargin {
  std::string name;
  double min_eig = 0.0;
  double required = 0.0;  // epsilon for strict constraints, 0 otherwise
  bool ok = false;
};

struct VerifyReport {
  bool pass = false;
  std::vector<ConstraintMargin> margins;
  /// Name of the worst constraint relative to its requirement.
  std::string worst;
  Json to_json() const;
};

/// Re-evaluates every constraint from the assignment with lmi::evaluate.
/// Pass iff all min eigenvalues >= -1e-7 and strict ones >= epsilon - 1e-7.
VerifyReport verify(const SynthesisProblem& problem, const Assignment& assignment);

}  // namespace koopctl
