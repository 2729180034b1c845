#include "koopctl/verify.h"

#include <cmath>
#include <complex>
#include <limits>

#include <boost/numeric/odeint.hpp>

#include "koopctl/errors.h"
#include "koopctl/io.h"

namespace koopctl {

namespace odeint = boost::numeric::odeint;

std::string to_string(Termination t) {
  switch (t) {
    case Termination::kConverged: return "converged";
    case Termination::kLeftDomain: return "left_domain";
    case Termination::kSingularFeedback: return "singular_feedback";
    case Termination::kHorizon: return "horizon";
    case Termination::kNumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

namespace {

using State = std::vector<double>;

Vector to_vector(const State& s) { return Eigen::Map<const Vector>(s.data(), static_cast<Eigen::Index>(s.size())); }

}  // namespace

Trajectory simulate(const Plant& plant, const Policy& policy, const Vector& x0,
                    const SimOptions& opts, const ValueFn& V) {
  const int n = plant.state_dim();
  if (x0.size() != n) throw DimensionError("simulate: x0 length");
  if (!x0.allFinite()) throw ValidationError("simulate: x0 is not finite");
  Trajectory tr;
  auto record = [&](double t, const Vector& x) {
    tr.t.push_back(t);
    tr.x.push_back(x);
    tr.u.push_back(policy(x));
    tr.V.push_back(V ? V(x) : std::numeric_limits<double>::quiet_NaN());
  };
  auto rhs = [&](const State& s, State& ds, double) {
    const Vector x = to_vector(s);
    const Vector f = plant.vector_field(x, policy(x));
    ds.assign(f.data(), f.data() + n);
  };

  State s(x0.data(), x0.data() + n);
  double t = 0.0;
  try {
    record(t, x0);
  } catch (const NumericalError& e) {
    tr.reason = Termination::kSingularFeedback;
    tr.message = e.what();
    return tr;
  }
  if (x0.norm() <= opts.converge_tol) {
    tr.reason = Termination::kConverged;
    return tr;
  }

  auto controlled = odeint::make_controlled(opts.atol, opts.rtol, odeint::runge_kutta_dopri5<State>());
  odeint::runge_kutta_dopri5<State> fixed;
  double dt = opts.fixed_step > 0.0 ? opts.fixed_step : opts.initial_step;
  try {
    while (t < opts.horizon) {
      const double remaining = opts.horizon - t;
      if (opts.fixed_step > 0.0) {
        const double h = std::min(dt, remaining);
        fixed.do_step(rhs, s, t, h);
        t += h;
      } else {
        double step = std::min(dt, remaining);
        const double before = step;
        while (controlled.try_step(rhs, s, t, step) == odeint::fail) {
          if (step < opts.min_step) {
            tr.reason = Termination::kNumericalFailure;
            tr.message = "step size underflow";
            return tr;
          }
        }
        // try_step grows step after success; keep it unless it was clipped.
        dt = before < dt ? dt : step;
      }
      const Vector x = to_vector(s);
      if (!x.allFinite() || x.norm() > opts.domain_radius) {
        tr.reason = Termination::kLeftDomain;
        return tr;
      }
      record(t, x);
      if (x.norm() <= opts.converge_tol) {
        tr.reason = Termination::kConverged;
        return tr;
      }
    }
  } catch (const NumericalError& e) {
    tr.reason = Termination::kSingularFeedback;
    tr.message = e.what();
    return tr;
  }
  tr.reason = Termination::kHorizon;
  return tr;
}

Trajectory simulate(const Plant& plant, const DesignResult& d, const Lifting& lifting,
                    const Vector& x0, const SimOptions& opts) {
  if (plant.input_dim() != d.m) throw DimensionError("simulate: input dimension mismatch");
  return simulate(
      plant, [&](const Vector& x) { return feedback(d, lifting, x); }, x0, opts,
      [&](const Vector& x) { return lyapunov_value(d, lifting, x); });
}

Json AuditReport::to_json() const {
  return {{"pass", pass}, {"max_increase", max_increase}, {"worst_step", worst_step}};
}

AuditReport lyapunov_audit(const Trajectory& traj, double slack) {
  AuditReport a;
  for (size_t k = 0; k + 1 < traj.V.size(); ++k) {
    const double inc = traj.V[k + 1] - traj.V[k];
    if (inc > a.max_increase) {
      a.max_increase = inc;
      a.worst_step = static_cast<int>(k);
    }
    if (!(inc <= slack * (1.0 + traj.V[k]))) a.pass = false;
  }
  return a;
}

void write_trajectory_dat(const std::filesystem::path& path, const Trajectory& traj) {
  if (traj.x.empty()) throw ValidationError("write_trajectory_dat: empty trajectory");
  const auto n = traj.x.front().size();
  const auto m = traj.u.front().size();
  Matrix rows(static_cast<Eigen::Index>(traj.t.size()), 1 + n + m + 1);
  std::string header = "t";
  for (Eigen::Index i = 0; i < n; ++i) header += " x" + std::to_string(i + 1);
  for (Eigen::Index i = 0; i < m; ++i) header += " u" + std::to_string(i + 1);
  header += " V";
  for (size_t k = 0; k < traj.t.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    rows(r, 0) = traj.t[k];
    rows.block(r, 1, 1, n) = traj.x[k].transpose();
    rows.block(r, 1 + n, 1, m) = traj.u[k].transpose();
    rows(r, 1 + n + m) = traj.V[k];
  }
  write_dat(path, rows, header);
}

bool stabilizable(const Matrix& A, const Matrix& B, double tol) {
  using CMatrix = Eigen::MatrixXcd;
  const auto n = A.rows();
  Eigen::EigenSolver<Matrix> es(A);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> s = es.eigenvalues()(i);
    if (s.real() < 0.0) continue;
    CMatrix M(n, n + B.cols());
    M.leftCols(n) = A.cast<std::complex<double>>() - s * CMatrix::Identity(n, n);
    M.rightCols(B.cols()) = B.cast<std::complex<double>>();
    Eigen::JacobiSVD<CMatrix> svd(M);
    const auto& sv = svd.singularValues();
    if (sv(n - 1) <= tol * std::max(1.0, sv(0))) return false;
  }
  return true;
}

Matrix solve_lyapunov(const Matrix& A, const Matrix& C) {
  const auto n = A.rows();
  const Matrix I = Matrix::Identity(n, n);
  // vec(A^T X + X A) = (I (x) A^T + A^T (x) I) vec(X)
  const Matrix K = kron(I, A.transpose()) + kron(A.transpose(), I);
  const Vector c = Eigen::Map<const Vector>(C.data(), n * n);
  Eigen::FullPivLU<Matrix> lu(K);
  if (!lu.isInvertible()) throw NumericalError("lyapunov equation is singular");
  const Vector x = lu.solve(-c);
  return symmetrize(Eigen::Map<const Matrix>(x.data(), n, n));
}

namespace {

double care_residual(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& Rinv,
                     const Matrix& X) {
  return (A.transpose() * X + X * A - X * B * Rinv * B.transpose() * X + Q).norm();
}

}  // namespace

CareSolution solve_care(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
  const auto n = A.rows();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || R.rows() != B.cols()) {
    throw DimensionError("solve_care: shapes");
  }
  if (!stabilizable(A, B)) throw ValidationError("(A, B) is not stabilizable");
  const Matrix Rinv = spd_inverse(R);
  Matrix H(2 * n, 2 * n);
  H << A, -B * Rinv * B.transpose(), -Q, -A.transpose();
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(H.cast<std::complex<double>>());
  Eigen::MatrixXcd U(2 * n, n);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < 2 * n && k < n; ++i) {
    if (es.eigenvalues()(i).real() < 0.0) U.col(k++) = es.eigenvectors().col(i);
  }
  if (k != n) throw NumericalError("solve_care: Hamiltonian has eigenvalues on the imaginary axis");
  const Eigen::MatrixXcd Xc = U.bottomRows(n) * U.topRows(n).inverse();
  CareSolution sol;
  sol.X = symmetrize(Xc.real());

  // Newton-Kleinman refinement.
  const double target = 1e-12 * std::max(1.0, Q.norm());
  for (int it = 0; it < 50; ++it) {
    sol.residual = care_residual(A, B, Q, Rinv, sol.X);
    if (sol.residual <= target) break;
    const Matrix K = Rinv * B.transpose() * sol.X;
    const Matrix Ak = A - B * K;
    const Matrix next = solve_lyapunov(Ak, Q + K.transpose() * R * K);
    if (!next.allFinite()) break;
    const double r = care_residual(A, B, Q, Rinv, next);
    if (!(r < sol.residual)) break;
    sol.X = next;
    ++sol.newton_steps;
  }
  sol.residual = care_residual(A, B, Q, Rinv, sol.X);
  sol.K = Rinv * B.transpose() * sol.X;
  return sol;
}

LqrBaseline lqr_baseline(const Surrogate& s, double q, double r) {
  if (!(q > 0.0) || !(r > 0.0)) throw ValidationError("lqr weights must be positive");
  LqrBaseline b;
  b.q = q;
  b.r = r;
  const int N = s.N();
  const int m = s.m();
  b.care = solve_care(s.A, s.B0, q * Matrix::Identity(N, N), r * Matrix::Identity(m, m));
  b.K = -b.care.K;
  return b;
}

std::vector<LqrBaseline> lqr_weight_grid(const Surrogate& s) {
  std::vector<LqrBaseline> out;
  for (double q : {0.1, 1.0, 10.0}) {
    for (double r : {0.1, 1.0, 10.0}) out.push_back(lqr_baseline(s, q, r));
  }
  return out;
}

}  // namespace koopctl
