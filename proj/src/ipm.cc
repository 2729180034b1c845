#include "koopctl/ipm.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "koopctl/errors.h"

namespace koopctl {

std::vector<Matrix> StandardSdp::slack(const Vector& y) const {
  std::vector<Matrix> Z = C;
  for (int i = 0; i < num_vars(); ++i) {
    for (const auto& [j, a] : A[static_cast<size_t>(i)]) Z[static_cast<size_t>(j)] -= y(i) * a;
  }
  return Z;
}

namespace {

using Blocks = std::vector<Matrix>;

double inner(const Blocks& a, const Blocks& b) {
  double s = 0.0;
  for (size_t j = 0; j < a.size(); ++j) s += a[j].cwiseProduct(b[j]).sum();
  return s;
}

double fro(const Blocks& a) { return std::sqrt(inner(a, a)); }

// <A_i, W> for every i.
Vector apply_A(const StandardSdp& p, const Blocks& W) {
  Vector out = Vector::Zero(p.num_vars());
  for (int i = 0; i < p.num_vars(); ++i) {
    for (const auto& [j, a] : p.A[static_cast<size_t>(i)]) {
      out(i) += a.cwiseProduct(W[static_cast<size_t>(j)]).sum();
    }
  }
  return out;
}

Blocks apply_At(const StandardSdp& p, const Vector& y) {
  Blocks out;
  for (int d : p.dims) out.push_back(Matrix::Zero(d, d));
  for (int i = 0; i < p.num_vars(); ++i) {
    for (const auto& [j, a] : p.A[static_cast<size_t>(i)]) out[static_cast<size_t>(j)] += y(i) * a;
  }
  return out;
}

// Largest alpha in (0, inf] with S + alpha dS >= 0, given S > 0.
double max_step(const Blocks& S, const Blocks& dS) {
  double alpha = std::numeric_limits<double>::infinity();
  for (size_t j = 0; j < S.size(); ++j) {
    Eigen::LLT<Matrix> llt(S[j]);
    if (llt.info() != Eigen::Success) return 0.0;
    const Matrix Linv = llt.matrixL().solve(Matrix::Identity(S[j].rows(), S[j].cols()));
    const Matrix T = Linv * dS[j] * Linv.transpose();
    const double lmin = min_eigenvalue(T);
    if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
  }
  return alpha;
}

bool inverse_blocks(const Blocks& Z, Blocks& Zinv) {
  Zinv.resize(Z.size());
  for (size_t j = 0; j < Z.size(); ++j) {
    Eigen::LLT<Matrix> llt(Z[j]);
    if (llt.info() != Eigen::Success) return false;
    Zinv[j] = symmetrize(llt.solve(Matrix::Identity(Z[j].rows(), Z[j].cols())));
  }
  return true;
}

}  // namespace

IpmResult solve_standard_sdp(const StandardSdp& p, const IpmOptions& o) {
  const int nv = p.num_vars();
  const int nb = p.num_blocks();
  if (static_cast<int>(p.C.size()) != nb || p.b.size() != nv) {
    throw DimensionError("standard SDP: inconsistent sizes");
  }
  int n_total = 0;
  for (int d : p.dims) n_total += d;

  IpmResult r;
  // Starting point scaled to the data, as in common SDP codes.
  double normC = fro(p.C);
  double max_a = 0.0;
  double xi = std::max(10.0, std::sqrt(static_cast<double>(n_total)));
  for (int i = 0; i < nv; ++i) {
    double na = 0.0;
    for (const auto& [j, a] : p.A[static_cast<size_t>(i)]) na += a.squaredNorm();
    na = std::sqrt(na);
    max_a = std::max(max_a, na);
    xi = std::max(xi, n_total * (1.0 + std::abs(p.b(i))) / (1.0 + na));
  }
  const double eta = std::max({10.0, std::sqrt(static_cast<double>(n_total)), max_a, normC});

  Vector y = o.y0.size() == nv ? o.y0 : Vector::Zero(nv);
  Blocks X, Z, Zinv;
  for (int d : p.dims) {
    X.push_back(xi * Matrix::Identity(d, d));
    Z.push_back(eta * Matrix::Identity(d, d));
  }

  const double nb_norm = 1.0 + p.b.norm();
  const double nc_norm = 1.0 + normC;

  for (int it = 0;; ++it) {
    r.iterations = it;
    const Vector Rp = p.b - apply_A(p, X);
    Blocks Rd = p.C;
    {
      const Blocks Aty = apply_At(p, y);
      for (int j = 0; j < nb; ++j) Rd[j] -= Z[j] + Aty[j];
    }
    const double pobj = inner(p.C, X);
    const double dobj = p.b.dot(y);
    r.primal_infeasibility = Rp.norm() / nb_norm;
    r.dual_infeasibility = fro(Rd) / nc_norm;
    r.relative_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    r.primal_objective = pobj;
    r.dual_objective = dobj;
    r.y = y;
    r.X = X;
    r.Z = Z;
    if (!std::isfinite(pobj) || !std::isfinite(dobj)) {
      r.status = IpmResult::Status::kNumericalFailure;
      r.message = "non-finite objective";
      return r;
    }
    const double mu = inner(X, Z) / n_total;
    if (r.primal_infeasibility <= o.tol_primal && r.dual_infeasibility <= o.tol_dual &&
        (r.relative_gap <= o.tol_gap || mu <= 1e-14)) {
      r.status = IpmResult::Status::kConverged;
      return r;
    }
    if (it >= o.max_iterations) {
      r.status = IpmResult::Status::kIterationLimit;
      r.message = "iteration limit reached";
      return r;
    }
    if (!inverse_blocks(Z, Zinv)) {
      r.status = IpmResult::Status::kNumericalFailure;
      r.message = "slack lost definiteness";
      return r;
    }

    // Schur complement M_ik = <A_i, X A_k Z^{-1}>.
    Matrix M = Matrix::Zero(nv, nv);
    std::vector<std::vector<std::pair<int, Matrix>>> by_block(static_cast<size_t>(nb));
    for (int i = 0; i < nv; ++i) {
      for (const auto& [j, a] : p.A[static_cast<size_t>(i)]) {
        by_block[static_cast<size_t>(j)].push_back({i, a});
      }
    }
    for (int j = 0; j < nb; ++j) {
      const auto& list = by_block[static_cast<size_t>(j)];
      for (const auto& [k, ak] : list) {
        const Matrix G = X[j] * ak * Zinv[j];
        for (const auto& [i, ai] : list) M(i, k) += ai.cwiseProduct(G).sum();
      }
    }
    M = symmetrize(M);
    Eigen::LLT<Matrix> chol(M);
    Eigen::LDLT<Matrix> ldlt;
    bool use_llt = chol.info() == Eigen::Success;
    if (!use_llt) {
      ldlt.compute(M + 1e-14 * (1.0 + M.diagonal().cwiseAbs().maxCoeff()) *
                            Matrix::Identity(nv, nv));
      if (ldlt.info() != Eigen::Success) {
        r.status = IpmResult::Status::kNumericalFailure;
        r.message = "Schur complement factorization failed";
        return r;
      }
    }
    auto solve_M = [&](const Vector& rhs) -> Vector {
      return use_llt ? Vector(chol.solve(rhs)) : Vector(ldlt.solve(rhs));
    };

    Blocks XRdZ(nb);
    for (int j = 0; j < nb; ++j) XRdZ[j] = X[j] * Rd[j] * Zinv[j];
    const Vector base = Rp + apply_A(p, XRdZ);

    // dX = sym(T - X dZ Z^{-1}), dZ = Rd - A^T dy, M dy = Rp - A(T) + A(X Rd Z^{-1}).
    auto direction = [&](const Blocks& T, Vector& dy, Blocks& dX, Blocks& dZ) {
      dy = solve_M(base - apply_A(p, T));
      const Blocks Atdy = apply_At(p, dy);
      dZ.resize(nb);
      dX.resize(nb);
      for (int j = 0; j < nb; ++j) {
        dZ[j] = symmetrize(Rd[j] - Atdy[j]);
        dX[j] = symmetrize(T[j] - X[j] * dZ[j] * Zinv[j]);
      }
    };

    Blocks T(nb);
    for (int j = 0; j < nb; ++j) T[j] = -X[j];
    Vector dy_a;
    Blocks dX_a, dZ_a;
    direction(T, dy_a, dX_a, dZ_a);
    const double ap_a = std::min(1.0, o.step_fraction * max_step(X, dX_a));
    const double ad_a = std::min(1.0, o.step_fraction * max_step(Z, dZ_a));
    Blocks Xa(nb), Za(nb);
    for (int j = 0; j < nb; ++j) {
      Xa[j] = X[j] + ap_a * dX_a[j];
      Za[j] = Z[j] + ad_a * dZ_a[j];
    }
    const double mu_aff = inner(Xa, Za) / n_total;
    double sigma = std::pow(std::max(0.0, mu_aff) / mu, 3.0);
    sigma = std::clamp(sigma, 0.0, 1.0);

    for (int j = 0; j < nb; ++j) {
      T[j] = sigma * mu * Zinv[j] - X[j] - dX_a[j] * dZ_a[j] * Zinv[j];
    }
    Vector dy;
    Blocks dX, dZ;
    direction(T, dy, dX, dZ);
    const double ap = std::min(1.0, o.step_fraction * max_step(X, dX));
    const double ad = std::min(1.0, o.step_fraction * max_step(Z, dZ));
    if (!(ap > 0.0) || !(ad > 0.0) || !dy.allFinite()) {
      r.status = IpmResult::Status::kNumericalFailure;
      r.message = "zero step length";
      return r;
    }
    for (int j = 0; j < nb; ++j) {
      X[j] = symmetrize(X[j] + ap * dX[j]);
      Z[j] = symmetrize(Z[j] + ad * dZ[j]);
    }
    y += ad * dy;
  }
}

}  // namespace koopctl
