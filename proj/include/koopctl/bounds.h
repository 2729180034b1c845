#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "koopctl/edmd.h"
#include "koopctl/lifting.h"
#include "koopctl/plants.h"

namespace koopctl {

struct QuadratureSpec {
  enum class Kind { kGrid, kMonteCarlo };
  Kind kind = Kind::kGrid;
  int points_per_axis = 101;   // grid
  long long samples = 1000000;  // Monte Carlo
  std::uint64_t seed = 0;

  /// Midpoint grid for n <= 3, Monte Carlo otherwise.
  static QuadratureSpec default_for(int n);
};

struct DataRequirementTerm {
  int k = 0;
  Matrix A_k;                // <phi_i, L^{e_k} phi_j> over the box
  Matrix sigma_A;            // entrywise standard deviations
  double norm_A = 0.0;       // spectral
  double c_r_k = 0.0;
  double sigma_A_fro2 = 0.0;
  double d0_k = 0.0;
};

struct DataRequirement {
  double c_r = 0.0;
  double delta = 0.0;
  double delta_tilde = 0.0;
  double c_r_tilde = 0.0;
  Matrix C;        // Gram matrix <phi_i, phi_j>
  Matrix sigma_C;  // entrywise standard deviations
  double norm_C_inv = 0.0;
  double sigma_C_fro2 = 0.0;
  std::vector<DataRequirementTerm> terms;  // k = 0..m
  double d0_real = 0.0;       // max_k expression, before rounding
  double d0 = 0.0;            // ceiling, as a double
  double log10_d0 = 0.0;
  std::optional<std::uint64_t> d0_exact;  // empty when above 2^63
  bool overflow = false;
  QuadratureSpec quadrature;
  long long evaluations = 0;
  double max_standard_error = 0.0;  // Monte Carlo only, over C and A_k entries

  Json to_json() const;
};

/// Sufficient sample count from the plant's true dynamics (oracle mode).
/// Inner products are Lebesgue integrals over the state box; variances are
/// taken under the normalized (uniform) measure; g_0 = 0.
DataRequirement compute_d0(const Plant& plant, const Lifting& lifting, double c_r, double delta,
                           const QuadratureSpec& quad);

/// c_r (||z|| + ||u||).
double remainder_bound(const Surrogate& s, const Vector& z, const Vector& u);

}  // namespace koopctl
