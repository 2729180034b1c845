#include "koopctl/controller.h"

#include <cmath>
#include <limits>
#include <numbers>

#include "koopctl/errors.h"
#include "koopctl/io.h"
#include "koopctl/rng.h"

namespace koopctl {

DesignResult DesignResult::from_assignment(const SynthesisProblem& problem, const Assignment& a) {
  DesignResult d;
  d.theorem = problem.theorem;
  d.N = problem.N;
  d.m = problem.m;
  d.P = symmetrize(a.at("P"));
  d.L = a.at("L");
  if (problem.theorem == 1) {
    d.Lambda = a.at("lambda");
  } else {
    d.Lambda = symmetrize(a.at("Lambda"));
  }
  auto it = a.find("Lw");
  d.Lw = it != a.end() ? it->second : Matrix::Zero(d.m, d.N * d.m);
  d.tau = a.at("tau")(0, 0);
  auto nu = a.find("nu");
  d.nu = nu != a.end() ? nu->second(0, 0) : 0.0;
  d.refresh();
  return d;
}

void DesignResult::refresh() {
  if (P.rows() != N || P.cols() != N) throw DimensionError("design: P shape");
  if (!(min_eigenvalue(P) > 0.0)) throw NumericalError("design: P is not positive definite");
  P_inv = spd_inverse(P);
  K = L * P_inv;
  Eigen::FullPivLU<Matrix> lu(Lambda);
  if (!lu.isInvertible()) throw NumericalError("design: Lambda is singular");
  Kw = Lw * kron(lu.inverse(), Matrix::Identity(N, N));
}

Json DesignResult::to_json() const {
  return {{"theorem", theorem},
          {"N", N},
          {"m", m},
          {"P", matrix_to_json(P)},
          {"L", matrix_to_json(L)},
          {"Lw", matrix_to_json(Lw)},
          {"Lambda", matrix_to_json(Lambda)},
          {"tau", tau},
          {"nu", nu},
          {"K", matrix_to_json(K)},
          {"Kw", matrix_to_json(Kw)},
          {"margins", margins}};
}

DesignResult DesignResult::from_json(const Json& j) {
  DesignResult d;
  d.theorem = j.at("theorem").get<int>();
  d.N = j.at("N").get<int>();
  d.m = j.at("m").get<int>();
  d.P = matrix_from_json(j.at("P"));
  d.L = matrix_from_json(j.at("L"));
  d.Lw = matrix_from_json(j.at("Lw"));
  d.Lambda = matrix_from_json(j.at("Lambda"));
  d.tau = j.at("tau").get<double>();
  d.nu = j.value("nu", 0.0);
  d.margins = j.value("margins", Json::object());
  if (d.L.rows() != d.m || d.L.cols() != d.N || d.Lw.rows() != d.m ||
      d.Lw.cols() != d.N * d.m || d.Lambda.rows() != d.m || d.Lambda.cols() != d.m) {
    throw DimensionError("design JSON has inconsistent shapes");
  }
  d.refresh();
  return d;
}

Vector feedback_lifted(const DesignResult& d, const Vector& phi_hat, double* condition) {
  if (phi_hat.size() != d.N) throw DimensionError("feedback: lifted state length");
  const Vector lin = d.K * phi_hat;
  if (!d.scheduled()) {
    if (condition) *condition = 1.0;
    return lin;
  }
  const Matrix sched =
      Matrix::Identity(d.m, d.m) - d.Kw * kron(Matrix::Identity(d.m, d.m), Matrix(phi_hat));
  Eigen::JacobiSVD<Matrix> svd(sched);
  const double smin = svd.singularValues().minCoeff();
  const double cond = smin > 0.0 ? svd.singularValues().maxCoeff() / smin
                                 : std::numeric_limits<double>::infinity();
  if (condition) *condition = cond;
  if (!(cond <= 1e12)) {
    throw NumericalError("feedback: scheduling matrix is singular (condition " +
                         format_double(cond) + ")");
  }
  return sched.fullPivLu().solve(lin);
}

Vector feedback(const DesignResult& d, const Lifting& lifting, const Vector& x,
                double* condition) {
  return feedback_lifted(d, lifting.lift_reduced(x), condition);
}

double lyapunov_value(const DesignResult& d, const Lifting& lifting, const Vector& x) {
  const Vector z = lifting.lift_reduced(x);
  return z.dot(d.P_inv * z);
}

RoaMembership roa_membership(const DesignResult& d, const Lifting& lifting, const Vector& x) {
  const double v = lyapunov_value(d, lifting, x);
  return {v <= 1.0, v};
}

RayHit ray_crossing(const LevelFn& g, const Vector& direction, double cap, double tol) {
  const Vector u = direction.normalized();
  auto G = [&](double r) { return g(Vector(r * u)); };
  // Geometric march for the first sign change, then bisection.
  double lo = 0.0;
  double hi = cap * 1e-7;
  while (G(hi) <= 1.0) {
    lo = hi;
    if (hi >= cap) return {cap, true};
    hi = std::min(cap, hi * 1.1);
  }
  while (hi - lo > tol * std::max(1.0, lo)) {
    const double mid = 0.5 * (lo + hi);
    (G(mid) <= 1.0 ? lo : hi) = mid;
  }
  return {lo, false};
}

RayHit roa_ray(const DesignResult& d, const Lifting& lifting, const Vector& direction,
               double cap, double tol) {
  return ray_crossing([&](const Vector& x) { return lyapunov_value(d, lifting, x); }, direction,
                      cap, tol);
}

bool RoaBoundary::any_open() const {
  for (bool o : open) {
    if (o) return true;
  }
  return false;
}

RoaBoundary star_boundary_2d(const LevelFn& g, int resolution, double cap) {
  if (resolution < 3) throw ValidationError("boundary: resolution < 3");
  RoaBoundary b;
  b.points.resize(resolution, 2);
  for (int k = 0; k < resolution; ++k) {
    const double th = 2.0 * std::numbers::pi * k / resolution;
    Vector dir(2);
    dir << std::cos(th), std::sin(th);
    const RayHit h = ray_crossing(g, dir, cap);
    b.points.row(k) = (h.radius * dir).transpose();
    b.angles.push_back(th);
    b.open.push_back(h.open);
  }
  return b;
}

RoaBoundary roa_boundary_2d(const DesignResult& d, const Lifting& lifting, int resolution,
                            double cap) {
  if (lifting.state_dim() != 2) throw DimensionError("roa_boundary_2d needs n = 2");
  return star_boundary_2d([&](const Vector& x) { return lyapunov_value(d, lifting, x); },
                          resolution, cap);
}

RoaBoundary region_boundary_2d(const UncertaintyRegion& region, const Lifting& lifting,
                               int resolution, double cap) {
  if (lifting.state_dim() != 2) throw DimensionError("region_boundary_2d needs n = 2");
  return star_boundary_2d(
      [&](const Vector& x) {
        return 1.0 - region.membership(lifting.lift_reduced(x)).margin / region.R();
      },
      resolution, cap);
}

double default_ray_cap(const Box& box) { return 1e3 * box.max_abs_extent(); }

double polygon_area(const Matrix& p) {
  double a = 0.0;
  const auto n = p.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto j = (i + 1) % n;
    a += p(i, 0) * p(j, 1) - p(j, 0) * p(i, 1);
  }
  return 0.5 * std::abs(a);
}

Json ContainmentReport::to_json() const {
  Json j = {{"ok", ok}, {"worst_margin", worst_margin}, {"checked", checked}};
  if (witness.size()) j["witness"] = vector_to_json(witness);
  return j;
}

ContainmentReport containment_check(const DesignResult& d, const UncertaintyRegion& region,
                                    const Lifting& lifting, int resolution, double cap,
                                    std::uint64_t seed) {
  ContainmentReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  auto probe = [&](const Vector& x) {
    const double mg = region.membership(lifting.lift_reduced(x)).margin;
    ++rep.checked;
    if (mg < rep.worst_margin) {
      rep.worst_margin = mg;
      rep.witness = x;
    }
  };
  const int n = lifting.state_dim();
  const double fracs[] = {0.25, 0.5, 0.75, 0.9, 1.0};
  if (n == 2) {
    const RoaBoundary b = roa_boundary_2d(d, lifting, resolution, cap);
    Vector lo = b.points.colwise().minCoeff().transpose();
    Vector hi = b.points.colwise().maxCoeff().transpose();
    for (int k = 0; k < resolution; ++k) {
      if (b.open[static_cast<size_t>(k)]) continue;
      for (double f : fracs) probe(f * b.points.row(k).transpose());
    }
    for (int i = 0; i < resolution; ++i) {
      for (int j = 0; j < resolution; ++j) {
        Vector x(2);
        x << lo(0) + (hi(0) - lo(0)) * (i + 0.5) / resolution,
            lo(1) + (hi(1) - lo(1)) * (j + 0.5) / resolution;
        if (lyapunov_value(d, lifting, x) <= 1.0) probe(x);
      }
    }
  } else {
    Rng rng(derive_seed(seed, 0x434f4e54));
    for (int k = 0; k < resolution; ++k) {
      const Vector dir = rng.unit_vector(n);
      const RayHit h = roa_ray(d, lifting, dir, cap);
      if (h.open) continue;
      for (double f : fracs) probe(f * h.radius * dir);
    }
  }
  if (rep.checked == 0) rep.worst_margin = 0.0;
  rep.ok = rep.worst_margin >= -1e-8;
  return rep;
}

RescaleResult rescale_to_box(const DesignResult& d, const Lifting& lifting, const Box& box,
                             int samples_per_edge) {
  const int n = box.dim();
  double vmin = std::numeric_limits<double>::infinity();
  Rng rng(derive_seed(0, 0x5245534b));
  for (int i = 0; i < n; ++i) {
    for (double face : {box.lower(i), box.upper(i)}) {
      for (int k = 0; k < samples_per_edge; ++k) {
        Vector x(n);
        for (int j = 0; j < n; ++j) {
          if (j == i) {
            x(j) = face;
          } else if (n == 2) {
            x(j) = box.lower(j) + (box.upper(j) - box.lower(j)) * k / (samples_per_edge - 1.0);
          } else {
            x(j) = rng.uniform(box.lower(j), box.upper(j));
          }
        }
        vmin = std::min(vmin, lyapunov_value(d, lifting, x));
      }
    }
  }
  RescaleResult r;
  r.factor = std::min(1.0, vmin);
  r.design = d;
  if (r.factor < 1.0) {
    const double s = r.factor;
    r.design.P *= s;
    r.design.L *= s;
    r.design.Lw *= s;
    r.design.Lambda *= s;
    r.design.tau *= s;
    r.design.nu *= s;
    r.design.refresh();
  }
  return r;
}

DualizationCheck dualization_check(const DesignResult& d, const Surrogate& s,
                                   const UncertaintyRegion& region) {
  const int N = d.N;
  const int m = d.m;
  const int Nm = N * m;
  const Matrix I = Matrix::Identity(N, N);
  const Matrix AK = s.A + s.B0 * d.K;
  const Matrix BKw = s.B_tilde() + s.B0 * d.Kw;

  // Column groups: (N, N | Nm, m | N, N+m); row groups: (N, Nm, N).
  const int c1 = 0, c2 = N, c3 = 2 * N, c4 = 2 * N + Nm, c5 = c4 + m, c6 = c5 + N;
  const int cols = c6 + N + m;
  Matrix psiT = Matrix::Zero(2 * N + Nm, cols);
  psiT.block(0, c1, N, N) = I;
  psiT.block(0, c2, N, N) = AK.transpose();
  psiT.block(0, c4, N, m) = d.K.transpose();
  psiT.block(0, c6, N, N) = I;
  psiT.block(0, c6 + N, N, m) = d.K.transpose();
  psiT.block(N, c2, Nm, N) = BKw.transpose();
  psiT.block(N, c3, Nm, Nm) = Matrix::Identity(Nm, Nm);
  psiT.block(N, c4, Nm, m) = d.Kw.transpose();
  psiT.block(N, c6 + N, Nm, m) = d.Kw.transpose();
  psiT.block(N + Nm, c2, N, N) = I;
  psiT.block(N + Nm, c5, N, N) = I;

  Matrix D = Matrix::Zero(cols, cols);
  D.block(c1, c2, N, N) = d.P_inv;
  D.block(c2, c1, N, N) = d.P_inv;
  D.block(c3, c3, Nm + m, Nm + m) = multiplier(region, d.Lambda.inverse()).full();
  D.block(c5, c5, N, N) = -I / d.tau;
  D.block(c6, c6, N + m, N + m) =
      Matrix::Identity(N + m, N + m) * (2.0 * s.c_r * s.c_r / d.tau);

  DualizationCheck out;
  out.M = symmetrize(psiT * D * psiT.transpose());
  out.max_eig = max_eigenvalue(out.M);
  out.ok = out.max_eig < 0.0;
  return out;
}

DecreaseCheck decrease_check(const DesignResult& d, const Surrogate& s,
                             const UncertaintyRegion& region, int samples, std::uint64_t seed) {
  DecreaseCheck out;
  out.worst = -std::numeric_limits<double>::infinity();
  Rng rng(derive_seed(seed, 0x44454352));
  const int N = d.N;
  // Boundary point along direction u: solve t^2 u'Qu + 2t S'u + R = 0, t > 0.
  for (int k = 0; k < samples; ++k) {
    const Vector u = rng.unit_vector(N);
    const double a = u.dot(region.Q() * u);
    const double b = region.S().dot(u);
    const double tmax = (-b - std::sqrt(b * b - a * region.R())) / a;
    const double frac = k % 4 == 0 ? 1.0 : rng.uniform();
    const Vector z = frac * tmax * u;
    if (z.norm() == 0.0) continue;
    Vector mu;
    try {
      mu = feedback_lifted(d, z);
    } catch (const NumericalError&) {
      ++out.skipped;
      continue;
    }
    Vector umz(N * d.m);
    for (int i = 0; i < d.m; ++i) umz.segment(i * N, N) = mu(i) * z;
    const Vector Pz = d.P_inv * z;
    const double r = std::sqrt(2.0) * s.c_r * std::sqrt(z.squaredNorm() + mu.squaredNorm());
    const double vdot = 2.0 * Pz.dot(s.A * z + s.B0 * mu + s.B_tilde() * umz) + 2.0 * Pz.norm() * r;
    const double val = vdot / z.squaredNorm();
    ++out.samples;
    if (val > out.worst) {
      out.worst = val;
      out.witness = z;
    }
  }
  out.ok = out.samples > 0 && out.worst < 0.0;
  return out;
}

void write_boundary_dat(const std::filesystem::path& path, const RoaBoundary& b) {
  Matrix closed(b.points.rows() + 1, 2);
  closed.topRows(b.points.rows()) = b.points;
  closed.row(b.points.rows()) = b.points.row(0);
  write_dat(path, closed, "x1 x2");
}

}  // namespace koopctl
