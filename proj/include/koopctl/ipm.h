#pragma once

#include <string>
#include <vector>

#include "koopctl/linalg.h"

namespace koopctl {

/// Block-diagonal SDP in the form
///   maximize b^T y  subject to  Z = C - sum_i y_i A_i >= 0,
/// with the paired problem  minimize <C, X>  s.t.  <A_i, X> = b_i, X >= 0.
struct StandardSdp {
  std::vector<int> dims;
  std::vector<Matrix> C;  // one per block
  /// Nonzero blocks of each A_i: entries (block, matrix).
  std::vector<std::vector<std::pair<int, Matrix>>> A;
  Vector b;

  int num_vars() const { return static_cast<int>(A.size()); }
  int num_blocks() const { return static_cast<int>(dims.size()); }
  std::vector<Matrix> slack(const Vector& y) const;
};

struct IpmOptions {
  double tol_primal = 1e-8;
  double tol_dual = 1e-8;
  double tol_gap = 1e-8;
  int max_iterations = 200;
  double step_fraction = 0.95;
  Vector y0;  // optional starting y (default 0)
};

struct IpmResult {
  enum class Status { kConverged, kIterationLimit, kNumericalFailure };
  Status status = Status::kNumericalFailure;
  Vector y;
  std::vector<Matrix> X;
  std::vector<Matrix> Z;
  double primal_objective = 0.0;  // <C, X>
  double dual_objective = 0.0;    // b^T y
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double relative_gap = 0.0;
  int iterations = 0;
  std::string message;
};

/// Dense infeasible-start primal-dual path following method with the HKM
/// search direction and Mehrotra predictor-corrector steps.
IpmResult solve_standard_sdp(const StandardSdp& sdp, const IpmOptions& opts = {});

}  // namespace koopctl
