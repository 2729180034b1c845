#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "koopctl/controller.h"
#include "koopctl/lifting.h"
#include "koopctl/plants.h"

namespace koopctl {

enum class Termination { kConverged, kLeftDomain, kSingularFeedback, kHorizon, kNumericalFailure };
std::string to_string(Termination t);

struct Trajectory {
  std::vector<double> t;
  std::vector<Vector> x;
  std::vector<Vector> u;
  std::vector<double> V;  // NaN when no Lyapunov function is attached
  Termination reason = Termination::kHorizon;
  std::string message;

  Vector final_state() const { return x.back(); }
  bool converged() const { return reason == Termination::kConverged; }
};

struct SimOptions {
  double horizon = 50.0;
  double rtol = 1e-9;
  double atol = 1e-9;
  double converge_tol = 1e-8;
  double initial_step = 1e-3;
  double min_step = 1e-14;
  /// |x| beyond this ends the run as left_domain.
  double domain_radius = 1e6;
  /// Use fixed steps of this size instead of error control (0: adaptive).
  double fixed_step = 0.0;
};

using Policy = std::function<Vector(const Vector&)>;
using ValueFn = std::function<double(const Vector&)>;

/// Integrates xdot = f(x) + G(x) policy(x) with Dormand-Prince 5(4).
/// NumericalError thrown by the policy ends the run as singular_feedback.
Trajectory simulate(const Plant& plant, const Policy& policy, const Vector& x0,
                    const SimOptions& opts = {}, const ValueFn& V = {});
Trajectory simulate(const Plant& plant, const DesignResult& d, const Lifting& lifting,
                    const Vector& x0, const SimOptions& opts = {});

struct AuditReport {
  bool pass = true;
  double max_increase = 0.0;
  int worst_step = -1;
  Json to_json() const;
};
/// Largest forward difference V_{k+1} - V_k; pass iff every increase is at
/// most 1e-6 (1 + V_k).
AuditReport lyapunov_audit(const Trajectory& traj, double slack = 1e-6);

/// Columns t, x_1..x_n, u_1..u_m, V.
void write_trajectory_dat(const std::filesystem::path& path, const Trajectory& traj);

/// Rank test of [A - s I, B] at every eigenvalue s of A with Re(s) >= 0.
bool stabilizable(const Matrix& A, const Matrix& B, double tol = 1e-9);

struct CareSolution {
  Matrix X;
  Matrix K;  // u = -K z
  double residual = 0.0;  // Frobenius norm of the Riccati residual
  int newton_steps = 0;
};
/// A^T X + X A - X B R^{-1} B^T X + Q = 0 via the stable invariant subspace
/// of the Hamiltonian, refined by Newton-Kleinman steps.
CareSolution solve_care(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R);

/// Continuous Lyapunov equation A^T X + X A + C = 0 (dense Kronecker solve).
Matrix solve_lyapunov(const Matrix& A, const Matrix& C);

struct LqrBaseline {
  double q = 1.0;
  double r = 1.0;
  Matrix K;  // m x N gain on the lifted state, u = K z
  CareSolution care;
};
/// LQR for zdot = A z + B0 u with weights q I and r I.
LqrBaseline lqr_baseline(const Surrogate& s, double q = 1.0, double r = 1.0);
/// Default grid q, r in {0.1, 1, 10}.
std::vector<LqrBaseline> lqr_weight_grid(const Surrogate& s);

}  // namespace koopctl
