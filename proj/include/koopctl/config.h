#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "koopctl/bounds.h"
#include "koopctl/lifting.h"
#include "koopctl/lmi.h"
#include "koopctl/plants.h"
#include "koopctl/sdp.h"
#include "koopctl/uncertainty.h"

namespace koopctl {

/// One JSON file drives collect -> fit -> design -> verify. See README for
/// the schema; every field has a default.
struct RunConfig {
  std::string example = "cooked_up";
  Json plant_params = Json::object();
  Json lifting;  // descriptor; null selects the example's dictionary

  int samples_per_batch = 5000;
  std::uint64_t seed = 1;
  double noise = 0.0;

  double c_r = 0.1;
  double delta = 0.05;

  struct Region {
    std::string mode = "explicit";  // or "heuristic"
    std::optional<Matrix> Qz;       // default -I
    std::optional<Vector> Sz;       // default 0
    double Rz = 500.0;
    double trace_scale = 1e3;  // heuristic step 1
  } region;

  int theorem = 1;
  SynthesisOptions synthesis;
  bool rescale_to_box = false;
  SolverOptions solver;

  int roa_resolution = 720;
  double roa_cap = 0.0;  // 0: 1e3 * max box extent

  int verify_starts = 20;
  double verify_horizon = 50.0;
  std::uint64_t verify_seed = 3;
  bool verify_lqr = true;

  QuadratureSpec d0;

  std::string output_dir = "out";

  static RunConfig preset(const std::string& name);
  static RunConfig from_json(const Json& j);
  Json to_json() const;
  /// Throws ValidationError for out-of-range fields.
  void validate() const;

  Plant make_plant() const;
  Lifting make_lifting() const;
  /// output_dir, placed under $KOOPCTL_OUT when that is set and the path is
  /// relative.
  std::filesystem::path output_path() const;
};

}  // namespace koopctl
