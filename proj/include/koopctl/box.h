#pragma once

#include <vector>

#include "koopctl/linalg.h"

namespace koopctl {

/// Axis-aligned box [lower, upper].
struct Box {
  Vector lower;
  Vector upper;

  Box() = default;
  Box(Vector lo, Vector hi);

  /// Same interval [lo, hi] on every axis.
  static Box uniform(int dim, double lo, double hi);

  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const Vector& x, double tol = 0.0) const;
  bool contains_in_interior(const Vector& x) const;
  double volume() const;
  Vector width() const { return upper - lower; }
  /// max_i max(|lower_i|, |upper_i|)
  double max_abs_extent() const;

  Json to_json() const;
  static Box from_json(const Json& j);
};

}  // namespace koopctl
