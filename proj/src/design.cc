#include "koopctl/design.h"

#include <limits>

#include "koopctl/errors.h"
#include "koopctl/io.h"

namespace koopctl {

std::string to_string(DesignStatus s) {
  switch (s) {
    case DesignStatus::kFeasible: return "feasible";
    case DesignStatus::kInfeasible: return "infeasible";
    case DesignStatus::kSolverFailure: return "solver_failure";
    case DesignStatus::kVerificationFailure: return "verification_failure";
  }
  return "unknown";
}

Json DesignOutcome::to_json() const {
  Json j = {{"status", to_string(status)},
            {"diagnosis", diagnosis},
            {"problem", problem.manifest()},
            {"solve", solve.to_json(program)},
            {"verification", verification.to_json()}};
  if (design) j["design"] = design->to_json();
  return j;
}

namespace {

std::string worst_block(const ConicProgram& p, const SolveReport& r) {
  std::string name;
  double w = std::numeric_limits<double>::infinity();
  for (size_t j = 0; j < r.min_eig.size() && j < p.blocks.size(); ++j) {
    if (r.min_eig[j] < w) {
      w = r.min_eig[j];
      name = p.blocks[j].name;
    }
  }
  return name.empty() ? "none" : name + " (min eigenvalue " + format_double(w) + ")";
}

}  // namespace

DesignOutcome synthesize(const Surrogate& s, const UncertaintyRegion& region, int theorem,
                         const SynthesisOptions& synth, const SolverOptions& solver) {
  DesignOutcome out;
  if (theorem == 1) {
    out.problem = build_theorem1(s, region, synth);
  } else if (theorem == 2) {
    out.problem = build_theorem2(s, region, synth);
  } else {
    throw ValidationError("theorem must be 1 or 2");
  }
  out.program = lower(out.problem);
  out.solve = solve(out.program, solver);
  switch (out.solve.status) {
    case SolveStatus::kFeasible: break;
    case SolveStatus::kInfeasibleCertificate:
      out.status = DesignStatus::kInfeasible;
      out.diagnosis = "infeasible: best margin " + format_double(out.solve.margin) +
                      ", worst constraint " + worst_block(out.program, out.solve);
      return out;
    default:
      out.status = DesignStatus::kSolverFailure;
      out.diagnosis = to_string(out.solve.status) + ": " + out.solve.message +
                      "; worst constraint " + worst_block(out.program, out.solve);
      return out;
  }
  const Assignment a = out.problem.vars.unpack(out.solve.scalars);
  out.verification = verify(out.problem, a);
  if (!out.verification.pass) {
    out.status = DesignStatus::kVerificationFailure;
    out.diagnosis = "solver reported feasible but verification failed at " +
                    out.verification.worst;
    return out;
  }
  try {
    out.design = DesignResult::from_assignment(out.problem, a);
  } catch (const NumericalError& e) {
    out.status = DesignStatus::kVerificationFailure;
    out.diagnosis = e.what();
    return out;
  }
  Json margins = Json::object();
  for (const auto& m : out.verification.margins) margins[m.name] = m.min_eig;
  out.design->margins = margins;
  out.status = DesignStatus::kFeasible;
  out.diagnosis = "feasible; tightest constraint " + out.verification.worst;
  return out;
}

Json HeuristicRegion::log() const {
  return {{"P_hat", matrix_to_json(P_hat)},
          {"region", region.to_json()},
          {"step1_constraints", step.problem.manifest().at("constraints")},
          {"step1_status", to_string(step.status)}};
}

HeuristicRegion procedure1_qz(const Surrogate& s, int theorem, double R_z,
                              const SolverOptions& solver, double trace_scale, double epsilon) {
  SynthesisOptions o;
  o.epsilon = epsilon;
  o.include_invariance = false;
  o.trace_cap = s.N() * trace_scale;
  DesignOutcome step = synthesize(s, UncertaintyRegion::identity(s.N(), R_z), theorem, o, solver);
  if (step.status != DesignStatus::kFeasible) {
    throw ValidationError("heuristic step 1 failed: " + step.diagnosis);
  }
  const Matrix P_hat = step.design->P;
  const Matrix Pinv = spd_inverse(P_hat);
  Matrix Q = symmetrize(-Pinv / spectral_norm(Pinv));
  return {UncertaintyRegion(Q, Vector::Zero(s.N()), R_z), P_hat, std::move(step)};
}

}  // namespace koopctl
