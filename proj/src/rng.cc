#include "koopctl/rng.h"

#include <cmath>
#include <numbers>

namespace koopctl {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(base ^ splitmix64(a)) + b);
}

Vector Rng::uniform_in(const Box& box) {
  Vector x(box.dim());
  for (int i = 0; i < box.dim(); ++i) x(i) = uniform(box.lower(i), box.upper(i));
  return x;
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vector Rng::unit_vector(int n) {
  Vector v(n);
  double norm = 0.0;
  while (norm < 1e-12) {
    for (int i = 0; i < n; ++i) v(i) = normal();
    norm = v.norm();
  }
  return v / norm;
}

}  // namespace koopctl
