#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "koopctl/config.h"
#include "koopctl/controller.h"
#include "koopctl/design.h"
#include "koopctl/edmd.h"
#include "koopctl/verify.h"

namespace koopctl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitVerification = 3;
inline constexpr int kExitBadInput = 4;

struct CommandResult {
  int exit_code = kExitOk;
  std::string message;
  Json summary = Json::object();
};

// In-process stages shared by the subcommands and the figure bundles.

struct FittedModel {
  Plant plant;
  Lifting lifting;
  SampleSet samples;
  FitReport fit;
  Surrogate surrogate;  // with c_r and delta attached
};
FittedModel fit_model(const RunConfig& cfg);

/// Explicit region (defaults Q_z = -I, S_z = 0) or the shape heuristic.
UncertaintyRegion make_region(const RunConfig& cfg, const Surrogate& s, Json* log = nullptr);

struct DesignRun {
  UncertaintyRegion region;
  Json region_log;
  DesignOutcome outcome;
  std::optional<DesignResult> design;  // after optional rescaling
  double rescale_factor = 1.0;
};
DesignRun run_design(const RunConfig& cfg, const FittedModel& model);

/// Post-solve certificates for a design: dualization, decrease samples,
/// containment sweep and RoA geometry (n = 2).
Json design_checks(const RunConfig& cfg, const FittedModel& model, const DesignRun& run);

/// Rejection samples of x with V(x) <= v_max inside the bounding box of the
/// RoA boundary (n = 2) or of the box scaled by the ray radii otherwise.
std::vector<Vector> sample_roa_starts(const DesignResult& d, const Lifting& lifting, int count,
                                      std::uint64_t seed, double cap, double v_max = 0.99);

struct BatchVerification {
  int total = 0;
  int converged = 0;      // final |x| <= final_tol
  int audit_passed = 0;
  double worst_increase = 0.0;
  double worst_final_norm = 0.0;
  std::vector<Trajectory> trajectories;
  std::vector<AuditReport> audits;
  Json to_json() const;
};
BatchVerification verify_batch(const Plant& plant, const DesignResult& d, const Lifting& lifting,
                               const std::vector<Vector>& starts, const SimOptions& sim,
                               double final_tol = 1e-6);

struct LqrContrast {
  int failures = 0;  // grid points with at least one non-converged start
  Json to_json() const;
  Json detail = Json::array();
};
LqrContrast lqr_contrast(const Plant& plant, const Surrogate& s, const Lifting& lifting,
                         const std::vector<Vector>& starts, const SimOptions& sim,
                         double final_tol = 1e-6);

/// Writes manifest_<command>.json: config echo, input hashes, outputs.
void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    const RunConfig& cfg, const std::vector<std::filesystem::path>& inputs,
                    const std::vector<std::filesystem::path>& outputs);

CommandResult cmd_collect(const RunConfig& cfg);
CommandResult cmd_fit(const RunConfig& cfg);
CommandResult cmd_d0(const RunConfig& cfg);
CommandResult cmd_design(const RunConfig& cfg);
CommandResult cmd_verify(const RunConfig& cfg);
/// fig1 .. fig5, or "all". Writes .dat files and fig<k>.json into `out`.
CommandResult cmd_reproduce(const std::string& figure, const std::filesystem::path& out,
                            const SolverOptions& solver = {});

}  // namespace koopctl
