#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "koopctl/box.h"
#include "koopctl/linalg.h"

namespace koopctl {

/// One scalar observable phi_k with its gradient.
struct Observable {
  using ValueFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;

  std::string kind;  // "constant", "coordinate", "monomial", "polynomial", "sin",
                     // "cos_minus_one", "custom"
  Json params;
  ValueFn value;
  GradientFn gradient;  // empty -> central finite differences
};

/// A term c * prod_k x_k^{p_k} of a polynomial observable.
struct PolynomialTerm {
  double coeff = 1.0;
  std::vector<int> powers;
};

/// Dictionary Phi = (1, x_1..x_n, phi_{n+1}..phi_N). Immutable once built.
class Lifting {
 public:
  class Builder {
   public:
    explicit Builder(int n);

    Builder& add_monomial(std::vector<int> powers);
    Builder& add_polynomial(std::vector<PolynomialTerm> terms);
    Builder& add_sin(int index);
    Builder& add_cos_minus_one(int index);
    /// User closure. Not serializable; gradient falls back to finite
    /// differences when omitted.
    Builder& add_custom(std::string name, Observable::ValueFn value,
                        Observable::GradientFn gradient = {});
    Builder& lipschitz_hint(double l);

    /// Validates phi_k(0) = 0 for the extra observables.
    Lifting build() const;

   private:
    int n_;
    std::vector<Observable> extra_;
    std::optional<double> hint_;
  };

  /// Rebuilds a lifting from descriptor(). Rejects non-conforming layouts.
  static Lifting from_descriptor(const Json& j);

  int state_dim() const { return n_; }
  /// Reduced dimension N (full dictionary has N+1 entries).
  int lifted_dim() const { return static_cast<int>(observables_.size()) - 1; }
  const std::vector<Observable>& observables() const { return observables_; }
  std::optional<double> lipschitz_hint() const { return hint_; }

  /// Full lift (length N+1).
  Vector lift(const Vector& x) const;
  /// Phi_hat = [0 I] Phi (length N).
  Vector lift_reduced(const Vector& x) const;
  /// (N+1) x n, row k is grad phi_k(x)^T.
  Matrix lift_gradient(const Vector& x) const;

  Json descriptor() const;

 private:
  Lifting(int n, std::vector<Observable> obs, std::optional<double> hint);
  void check_dim(const Vector& x) const;

  int n_;
  std::vector<Observable> observables_;
  std::optional<double> hint_;
};

/// Central finite-difference gradient with step 1e-6 * (1 + |x_k|).
Vector finite_difference_gradient(const Observable::ValueFn& f, const Vector& x);

/// Max of ||Phi(x) - Phi(y)|| / ||x - y|| over `samples` seeded pairs in
/// the box. Pair i only depends on (seed, i), so the estimate is
/// nondecreasing in `samples`.
double estimate_lipschitz(const Lifting& lifting, const Box& box, int samples,
                          std::uint64_t seed = 0);

/// Dictionaries of the worked examples.
Lifting identity_lifting(int n);
Lifting cooked_up_lifting(double rho = -2.0, double lambda = 1.0);
Lifting cooked_up_xy_lifting(double rho = -2.0, double lambda = 1.0);
Lifting pendulum_lifting();

}  // namespace koopctl
