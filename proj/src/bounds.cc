#include "koopctl/bounds.h"

#include <cmath>
#include <limits>

#include "koopctl/errors.h"
#include "koopctl/rng.h"

namespace koopctl {

QuadratureSpec QuadratureSpec::default_for(int n) {
  QuadratureSpec q;
  q.kind = n <= 3 ? Kind::kGrid : Kind::kMonteCarlo;
  return q;
}

namespace {

// Running sums of the integrands at unit weight.
struct Moments {
  Matrix c1, c2;               // phi_i phi_j and its square
  std::vector<Matrix> a1, a2;  // phi_i L_k phi_j and its square
  long long count = 0;

  Moments(int size, int m) : c1(Matrix::Zero(size, size)), c2(Matrix::Zero(size, size)) {
    for (int k = 0; k <= m; ++k) {
      a1.push_back(Matrix::Zero(size, size));
      a2.push_back(Matrix::Zero(size, size));
    }
  }

  void add(const Plant& plant, const Lifting& lifting, const Vector& x) {
    const Vector phi = lifting.lift(x);
    const Matrix grad = lifting.lift_gradient(x);
    const Vector f = plant.drift(x);
    const Matrix g = plant.input_matrix(x);
    const Vector phi2 = phi.array().square();
    c1.noalias() += phi * phi.transpose();
    c2.noalias() += phi2 * phi2.transpose();
    for (size_t k = 0; k < a1.size(); ++k) {
      Vector field = f;
      if (k > 0) field += g.col(static_cast<Eigen::Index>(k) - 1);
      const Vector lie = grad * field;
      if (!lie.allFinite() || !phi.allFinite()) {
        throw NumericalError("compute_d0: non-finite integrand");
      }
      a1[k].noalias() += phi * lie.transpose();
      a2[k].noalias() += phi2 * lie.array().square().matrix().transpose();
    }
    ++count;
  }
};

Moments integrate(const Plant& plant, const Lifting& lifting, const QuadratureSpec& q) {
  const int n = plant.state_dim();
  const Box& box = plant.state_box();
  Moments mom(lifting.lifted_dim() + 1, plant.input_dim());
  if (q.kind == QuadratureSpec::Kind::kGrid) {
    if (q.points_per_axis < 1) throw ValidationError("quadrature: points_per_axis < 1");
    const long long p = q.points_per_axis;
    long long total = 1;
    for (int i = 0; i < n; ++i) {
      if (total > std::numeric_limits<long long>::max() / p) {
        throw ValidationError("quadrature: grid too large");
      }
      total *= p;
    }
    Vector x(n);
    for (long long idx = 0; idx < total; ++idx) {
      long long r = idx;
      for (int i = 0; i < n; ++i) {
        const long long c = r % p;
        r /= p;
        x(i) = box.lower(i) + (static_cast<double>(c) + 0.5) / static_cast<double>(p) *
                                  (box.upper(i) - box.lower(i));
      }
      mom.add(plant, lifting, x);
    }
  } else {
    if (q.samples < 2) throw ValidationError("quadrature: need at least 2 samples");
    Rng rng(derive_seed(q.seed, 0x443030ULL));
    for (long long s = 0; s < q.samples; ++s) mom.add(plant, lifting, rng.uniform_in(box));
  }
  return mom;
}

Matrix variance(const Matrix& mean, const Matrix& mean_sq) {
  return (mean_sq - mean.cwiseProduct(mean)).cwiseMax(0.0);
}

}  // namespace

DataRequirement compute_d0(const Plant& plant, const Lifting& lifting, double c_r, double delta,
                           const QuadratureSpec& quad) {
  if (!(c_r > 0.0)) throw ValidationError("compute_d0: c_r must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("compute_d0: delta must lie in (0,1)");
  if (plant.state_dim() != lifting.state_dim()) throw DimensionError("compute_d0: n mismatch");
  const int m = plant.input_dim();
  const double size = lifting.lifted_dim() + 1;
  const double vol = plant.state_box().volume();
  if (!(vol > 0.0)) throw ValidationError("compute_d0: degenerate state box");

  const Moments mom = integrate(plant, lifting, quad);
  const double inv_count = 1.0 / static_cast<double>(mom.count);

  DataRequirement r;
  r.c_r = c_r;
  r.delta = delta;
  r.quadrature = quad;
  r.evaluations = mom.count;
  r.delta_tilde = delta / (3.0 * (m + 1));
  double umax = 0.0;
  const Box& ub = plant.input_box();
  for (int i = 0; i < m; ++i) umax += std::max(std::abs(ub.lower(i)), std::abs(ub.upper(i)));
  r.c_r_tilde = c_r / ((m + 1) * (1.0 + umax));

  const Matrix c_mean = mom.c1 * inv_count;
  r.C = vol * c_mean;
  const Matrix var_c = variance(c_mean, mom.c2 * inv_count);
  r.sigma_C = var_c.cwiseSqrt();
  r.sigma_C_fro2 = var_c.sum();
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(r.C), Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues()(0) > 0.0)) {
    throw NumericalError("compute_d0: Gram matrix is singular on the box");
  }
  r.norm_C_inv = 1.0 / es.eigenvalues()(0);

  const bool mc = quad.kind == QuadratureSpec::Kind::kMonteCarlo;
  const double se_scale = std::sqrt(inv_count);
  if (mc) r.max_standard_error = vol * r.sigma_C.maxCoeff() * se_scale;

  r.d0_real = 0.0;
  for (int k = 0; k <= m; ++k) {
    DataRequirementTerm t;
    t.k = k;
    const Matrix a_mean = mom.a1[static_cast<size_t>(k)] * inv_count;
    t.A_k = vol * a_mean;
    const Matrix var_a = variance(a_mean, mom.a2[static_cast<size_t>(k)] * inv_count);
    t.sigma_A = var_a.cwiseSqrt();
    t.sigma_A_fro2 = var_a.sum();
    t.norm_A = spectral_norm(t.A_k);
    const double prod = t.norm_A * r.norm_C_inv;
    t.c_r_k = std::min(1.0, 1.0 / prod) * t.norm_A * r.c_r_tilde / (2.0 * prod + r.c_r_tilde);
    if (!(t.c_r_k > 0.0)) throw NumericalError("compute_d0: c_r_k is not positive");
    t.d0_k = size * size / (r.delta_tilde * t.c_r_k * t.c_r_k) *
             std::max(t.sigma_A_fro2, r.sigma_C_fro2);
    if (mc) r.max_standard_error = std::max(r.max_standard_error,
                                            vol * t.sigma_A.maxCoeff() * se_scale);
    r.d0_real = std::max(r.d0_real, t.d0_k);
    r.terms.push_back(std::move(t));
  }
  if (!std::isfinite(r.d0_real)) throw NumericalError("compute_d0: non-finite bound");
  r.d0 = std::max(1.0, std::ceil(r.d0_real));
  r.log10_d0 = std::log10(r.d0);
  if (r.d0 < 9.2e18) {
    r.d0_exact = static_cast<std::uint64_t>(r.d0);
  } else {
    r.overflow = true;
  }
  return r;
}

Json DataRequirement::to_json() const {
  Json per_k = Json::array();
  for (const auto& t : terms) {
    per_k.push_back({{"k", t.k},
                     {"c_r_k", t.c_r_k},
                     {"norms", {{"A_k_spectral", t.norm_A}, {"C_inv_spectral", norm_C_inv}}},
                     {"sigma_frobenius", {{"A_k_squared", t.sigma_A_fro2},
                                          {"C_squared", sigma_C_fro2}}},
                     {"d0_k", t.d0_k},
                     {"A_k", matrix_to_json(t.A_k)}});
  }
  Json q = {{"kind", quadrature.kind == QuadratureSpec::Kind::kGrid ? "grid" : "monte_carlo"},
            {"evaluations", evaluations}};
  if (quadrature.kind == QuadratureSpec::Kind::kGrid) {
    q["points_per_axis"] = quadrature.points_per_axis;
  } else {
    q["samples"] = quadrature.samples;
    q["seed"] = quadrature.seed;
    q["max_standard_error"] = max_standard_error;
  }
  Json j = {{"d0", d0},
            {"log10_d0", log10_d0},
            {"d0_overflow", overflow},
            {"c_r", c_r},
            {"delta", delta},
            {"delta_tilde", delta_tilde},
            {"c_r_tilde", c_r_tilde},
            {"C", matrix_to_json(C)},
            {"per_k", per_k},
            {"quadrature", q}};
  j["d0_exact"] = d0_exact ? Json(*d0_exact) : Json(nullptr);
  return j;
}

double remainder_bound(const Surrogate& s, const Vector& z, const Vector& u) {
  return s.c_r * (z.norm() + u.norm());
}

}  // namespace koopctl
