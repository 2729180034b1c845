#pragma once

#include <optional>
#include <string>

#include "koopctl/controller.h"
#include "koopctl/edmd.h"
#include "koopctl/lmi.h"
#include "koopctl/sdp.h"
#include "koopctl/uncertainty.h"

namespace koopctl {

enum class DesignStatus { kFeasible, kInfeasible, kSolverFailure, kVerificationFailure };
std::string to_string(DesignStatus s);

struct DesignOutcome {
  DesignStatus status = DesignStatus::kSolverFailure;
  SynthesisProblem problem;
  ConicProgram program;
  SolveReport solve;
  VerifyReport verification;
  std::optional<DesignResult> design;
  /// Human-readable summary naming the constraint with the worst margin.
  std::string diagnosis;

  Json to_json() const;
};

/// build -> lower -> solve -> verify -> extract. Assignments that fail the
/// independent check never become designs.
DesignOutcome synthesize(const Surrogate& s, const UncertaintyRegion& region, int theorem,
                         const SynthesisOptions& synth = {}, const SolverOptions& solver = {});

struct HeuristicRegion {
  UncertaintyRegion region;
  Matrix P_hat;
  DesignOutcome step;
  Json log() const;
};

/// Shape heuristic: solve the chosen theorem with Q_z = -I, S_z = 0 and R_z
/// without the invariance inequality (trace(P) <= N * trace_scale keeps it
/// bounded), then return Q_z = -P^{-1} / |P^{-1}|_2 with the same R_z.
/// Throws ValidationError when the first step is infeasible.
HeuristicRegion procedure1_qz(const Surrogate& s, int theorem, double R_z,
                              const SolverOptions& solver = {}, double trace_scale = 1e3,
                              double epsilon = 1e-6);

}  // namespace koopctl
