#pragma once

#include <filesystem>
#include <string>

#include "koopctl/edmd.h"
#include "koopctl/lifting.h"
#include "koopctl/linalg.h"

namespace koopctl::testing {

// Lifted model of the cooked-up plant with rho = -2, lambda = 1, written
// out by hand from the dynamics.
inline Surrogate exact_cooked_up(double c_r = 0.1, double delta = 0.05) {
  Surrogate s;
  s.A = Matrix(3, 3);
  s.A << -2, 0, 0, 0, -4, 5, 0, 0, 1;
  s.B0 = Matrix(3, 1);
  s.B0 << 0, 1, 1;
  s.B = {Matrix::Zero(3, 3)};
  s.lifting = cooked_up_lifting().descriptor();
  return s.with_error_bound(c_r, delta);
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("koopctl_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace koopctl::testing
