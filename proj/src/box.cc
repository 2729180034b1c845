#include "koopctl/box.h"

#include <cmath>

#include "koopctl/errors.h"

namespace koopctl {

Box::Box(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) throw DimensionError("Box: bound sizes differ");
  if (!lower.allFinite() || !upper.allFinite()) throw ValidationError("Box: non-finite bound");
  if ((upper.array() < lower.array()).any()) throw ValidationError("Box: upper < lower");
}

Box Box::uniform(int dim, double lo, double hi) {
  return Box(Vector::Constant(dim, lo), Vector::Constant(dim, hi));
}

bool Box::contains(const Vector& x, double tol) const {
  if (x.size() != lower.size()) return false;
  return ((x.array() >= lower.array() - tol) && (x.array() <= upper.array() + tol)).all();
}

bool Box::contains_in_interior(const Vector& x) const {
  if (x.size() != lower.size()) return false;
  return ((x.array() > lower.array()) && (x.array() < upper.array())).all();
}

double Box::volume() const { return (upper - lower).prod(); }

double Box::max_abs_extent() const {
  double r = 0.0;
  for (int i = 0; i < dim(); ++i) r = std::max({r, std::abs(lower(i)), std::abs(upper(i))});
  return r;
}

Json Box::to_json() const {
  return {{"lower", vector_to_json(lower)}, {"upper", vector_to_json(upper)}};
}

Box Box::from_json(const Json& j) {
  return Box(vector_from_json(j.at("lower")), vector_from_json(j.at("upper")));
}

}  // namespace koopctl
