#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "koopctl/box.h"
#include "koopctl/edmd.h"
#include "koopctl/lifting.h"
#include "koopctl/lmi.h"
#include "koopctl/uncertainty.h"

namespace koopctl {

/// Solved synthesis variables and the gains derived from them. Theorem-1
/// results store lambda as a 1x1 Lambda and a zero L_w.
struct DesignResult {
  int theorem = 1;
  int N = 0;
  int m = 0;
  Matrix P;       // N x N
  Matrix L;       // m x N
  Matrix Lw;      // m x Nm
  Matrix Lambda;  // m x m
  double tau = 0.0;
  double nu = 0.0;
  Matrix K;   // L P^{-1}
  Matrix Kw;  // L_w (Lambda^{-1} (x) I_N)
  Matrix P_inv;
  Json margins = Json::object();

  static DesignResult from_assignment(const SynthesisProblem& problem, const Assignment& a);
  /// Recomputes K, K_w and P^{-1}; throws if P is not positive definite.
  void refresh();
  bool scheduled() const { return Lw.size() > 0 && Lw.cwiseAbs().maxCoeff() > 0.0; }
  Json to_json() const;
  static DesignResult from_json(const Json& j);
};

/// Control law as a function of the lifted state.
Vector feedback_lifted(const DesignResult& d, const Vector& phi_hat,
                       double* condition = nullptr);
Vector feedback(const DesignResult& d, const Lifting& lifting, const Vector& x,
                double* condition = nullptr);

/// Phi_hat^T P^{-1} Phi_hat.
double lyapunov_value(const DesignResult& d, const Lifting& lifting, const Vector& x);

struct RoaMembership {
  bool inside = false;
  double V = 0.0;
};
RoaMembership roa_membership(const DesignResult& d, const Lifting& lifting, const Vector& x);

struct RayHit {
  double radius = 0.0;
  bool open = false;  // V never reached 1 before the cap
};
using LevelFn = std::function<double(const Vector&)>;

/// First crossing of g = 1 along x = r * direction, r in (0, cap], for g
/// with g(0) < 1. Returns the last radius with g <= 1 after bisection.
RayHit ray_crossing(const LevelFn& g, const Vector& direction, double cap, double tol = 1e-8);

/// First crossing of V = 1 along x = r * direction, r in (0, cap].
RayHit roa_ray(const DesignResult& d, const Lifting& lifting, const Vector& direction,
               double cap, double tol = 1e-8);

struct RoaBoundary {
  Matrix points;  // resolution x 2, counterclockwise from angle 0
  std::vector<double> angles;
  std::vector<bool> open;
  bool any_open() const;
};
RoaBoundary roa_boundary_2d(const DesignResult& d, const Lifting& lifting, int resolution,
                            double cap);
/// Boundary of {x : g(x) <= 1} seen from the origin along `resolution` rays.
RoaBoundary star_boundary_2d(const LevelFn& g, int resolution, double cap);
/// Boundary of {x : Phi_hat(x) in region}, using g = 1 - margin / R_z.
RoaBoundary region_boundary_2d(const UncertaintyRegion& region, const Lifting& lifting,
                               int resolution, double cap);
/// Default cap 1e3 * (max axis extent of the box).
double default_ray_cap(const Box& box);

/// Shoelace area of a closed polygon given as rows.
double polygon_area(const Matrix& points);

struct ContainmentReport {
  bool ok = true;
  double worst_margin = 0.0;
  Vector witness;
  int checked = 0;
  Json to_json() const;
};
/// Region membership margin of Phi_hat(x) over boundary points and an
/// interior grid (n = 2), or sampled rays otherwise.
ContainmentReport containment_check(const DesignResult& d, const UncertaintyRegion& region,
                                    const Lifting& lifting, int resolution, double cap,
                                    std::uint64_t seed = 0);

struct RescaleResult {
  DesignResult design;
  double factor = 1.0;
};
/// Scales P, L, L_w, Lambda, tau and nu by s = min(1, min_{x on box boundary} V(x)),
/// so that the scaled sublevel set stays inside the box. K and K_w are unchanged.
RescaleResult rescale_to_box(const DesignResult& d, const Lifting& lifting, const Box& box,
                             int samples_per_edge = 400);

/// The primal quadratic form before dualization, evaluated at the solution.
/// Negative definite for a valid certificate.
struct DualizationCheck {
  Matrix M;
  double max_eig = 0.0;
  bool ok = false;
};
DualizationCheck dualization_check(const DesignResult& d, const Surrogate& s,
                                   const UncertaintyRegion& region);

/// Largest sampled value of the surrogate decrease bound
///   2 z^T P^{-1} (A z + B0 mu + Btilde (mu (x) z)) + 2 |P^{-1} z| r(z, mu)
/// for z in the region (r = sqrt(2) c_r |(z, mu)|), normalized by |z|^2.
struct DecreaseCheck {
  double worst = 0.0;
  Vector witness;
  int samples = 0;
  int skipped = 0;  // singular scheduling
  bool ok = false;
};
DecreaseCheck decrease_check(const DesignResult& d, const Surrogate& s,
                             const UncertaintyRegion& region, int samples,
                             std::uint64_t seed = 0);

void write_boundary_dat(const std::filesystem::path& path, const RoaBoundary& b);

}  // namespace koopctl
