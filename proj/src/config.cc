#include "koopctl/config.h"

#include <cstdlib>

#include "koopctl/errors.h"

namespace koopctl {

RunConfig RunConfig::preset(const std::string& name) {
  RunConfig c;
  c.example = name;
  c.output_dir = "out/" + name;
  if (name == "cooked_up") {
    c.samples_per_batch = 5000;
    c.c_r = 0.1;
    c.region.Rz = 500.0;
    c.theorem = 1;
    // Largest P: the RoA then fills the region.
    c.synthesis.maximize_min_eig_P = true;
    c.solver.center = false;
    c.solver.variable_box = 1e6;
  } else if (name == "cooked_up_xy") {
    c.samples_per_batch = 5000;
    c.noise = 0.05;
    c.c_r = 0.01;
    c.region.Rz = 1000.0;
    c.theorem = 2;
  } else if (name == "pendulum") {
    c.samples_per_batch = 15000;
    c.c_r = 0.02;
    c.region.Rz = 30.0;
    c.theorem = 1;
  } else {
    throw ValidationError("unknown preset '" + name + "'");
  }
  c.d0 = QuadratureSpec::default_for(2);
  return c;
}

namespace {

QuadratureSpec quadrature_from_json(const Json& j, QuadratureSpec q) {
  const std::string kind = j.value("kind", q.kind == QuadratureSpec::Kind::kGrid ? "grid" : "mc");
  if (kind == "grid") {
    q.kind = QuadratureSpec::Kind::kGrid;
  } else if (kind == "mc") {
    q.kind = QuadratureSpec::Kind::kMonteCarlo;
  } else {
    throw ValidationError("d0.kind must be 'grid' or 'mc'");
  }
  q.points_per_axis = j.value("points_per_axis", q.points_per_axis);
  q.samples = j.value("samples", q.samples);
  q.seed = j.value("seed", q.seed);
  return q;
}

}  // namespace

RunConfig RunConfig::from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  RunConfig c = j.contains("preset") ? preset(j.at("preset").get<std::string>()) : RunConfig{};
  try {
    c.example = j.value("example", c.example);
    if (j.contains("plant")) c.plant_params = j.at("plant");
    if (j.contains("lifting")) c.lifting = j.at("lifting");
    if (j.contains("sampling")) {
      const Json& s = j.at("sampling");
      c.samples_per_batch = s.value("d", c.samples_per_batch);
      c.seed = s.value("seed", c.seed);
      c.noise = s.value("noise", c.noise);
    }
    c.c_r = j.value("c_r", c.c_r);
    c.delta = j.value("delta", c.delta);
    if (j.contains("region")) {
      const Json& r = j.at("region");
      c.region.mode = r.value("mode", c.region.mode);
      if (r.contains("Qz") && !r.at("Qz").is_null()) c.region.Qz = matrix_from_json(r.at("Qz"));
      if (r.contains("Sz") && !r.at("Sz").is_null()) c.region.Sz = vector_from_json(r.at("Sz"));
      c.region.Rz = r.value("Rz", c.region.Rz);
      c.region.trace_scale = r.value("trace_scale", c.region.trace_scale);
    }
    c.theorem = j.value("theorem", c.theorem);
    if (j.contains("design")) {
      const Json& d = j.at("design");
      c.synthesis.epsilon = d.value("epsilon", c.synthesis.epsilon);
      c.synthesis.include_invariance = d.value("include_invariance", c.synthesis.include_invariance);
      c.synthesis.freeze_Lw = d.value("freeze_Lw", c.synthesis.freeze_Lw);
      c.synthesis.maximize_min_eig_P = d.value("maximize_min_eig_P", c.synthesis.maximize_min_eig_P);
      c.rescale_to_box = d.value("rescale_to_box", c.rescale_to_box);
    }
    if (j.contains("solver")) {
      Json merged = c.solver.to_json();
      merged.update(j.at("solver"));
      c.solver = SolverOptions::from_json(merged);
    }
    if (j.contains("roa")) {
      c.roa_resolution = j.at("roa").value("resolution", c.roa_resolution);
      c.roa_cap = j.at("roa").value("cap", c.roa_cap);
    }
    if (j.contains("verify")) {
      const Json& v = j.at("verify");
      c.verify_starts = v.value("starts", c.verify_starts);
      c.verify_horizon = v.value("horizon", c.verify_horizon);
      c.verify_seed = v.value("seed", c.verify_seed);
      c.verify_lqr = v.value("lqr", c.verify_lqr);
    }
    if (j.contains("d0")) c.d0 = quadrature_from_json(j.at("d0"), c.d0);
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

Json RunConfig::to_json() const {
  Json region_j = {{"mode", region.mode}, {"Rz", region.Rz}, {"trace_scale", region.trace_scale}};
  region_j["Qz"] = region.Qz ? matrix_to_json(*region.Qz) : Json();
  region_j["Sz"] = region.Sz ? vector_to_json(*region.Sz) : Json();
  Json solver_j = solver.to_json();
  return {{"example", example},
          {"plant", plant_params},
          {"lifting", lifting},
          {"sampling", {{"d", samples_per_batch}, {"seed", seed}, {"noise", noise}}},
          {"c_r", c_r},
          {"delta", delta},
          {"region", region_j},
          {"theorem", theorem},
          {"design",
           {{"epsilon", synthesis.epsilon},
            {"include_invariance", synthesis.include_invariance},
            {"freeze_Lw", synthesis.freeze_Lw},
            {"maximize_min_eig_P", synthesis.maximize_min_eig_P},
            {"rescale_to_box", rescale_to_box}}},
          {"solver", solver_j},
          {"roa", {{"resolution", roa_resolution}, {"cap", roa_cap}}},
          {"verify",
           {{"starts", verify_starts},
            {"horizon", verify_horizon},
            {"seed", verify_seed},
            {"lqr", verify_lqr}}},
          {"d0",
           {{"kind", d0.kind == QuadratureSpec::Kind::kGrid ? "grid" : "mc"},
            {"points_per_axis", d0.points_per_axis},
            {"samples", d0.samples},
            {"seed", d0.seed}}},
          {"output_dir", output_dir}};
}

void RunConfig::validate() const {
  parse_example_id(example);
  if (!(c_r > 0.0)) throw ValidationError("c_r must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
  if (samples_per_batch < 1) throw ValidationError("sampling.d must be at least 1");
  if (!(noise >= 0.0)) throw ValidationError("sampling.noise must be nonnegative");
  if (region.mode != "explicit" && region.mode != "heuristic") {
    throw ValidationError("region.mode must be 'explicit' or 'heuristic'");
  }
  if (!(region.Rz > 0.0)) throw ValidationError("region.Rz must be positive");
  if (theorem != 1 && theorem != 2) throw ValidationError("theorem must be 1 or 2");
  if (roa_resolution < 3) throw ValidationError("roa.resolution must be at least 3");
  if (verify_starts < 0) throw ValidationError("verify.starts must be nonnegative");
  if (!(verify_horizon > 0.0)) throw ValidationError("verify.horizon must be positive");
}

Plant RunConfig::make_plant() const { return make_example(parse_example_id(example), plant_params); }

Lifting RunConfig::make_lifting() const {
  if (!lifting.is_null()) return Lifting::from_descriptor(lifting);
  const double rho = plant_params.value("rho", -2.0);
  const double lambda = plant_params.value("lambda", 1.0);
  switch (parse_example_id(example)) {
    case ExampleId::kCookedUp: return cooked_up_lifting(rho, lambda);
    case ExampleId::kCookedUpXy: return cooked_up_xy_lifting(rho, lambda);
    case ExampleId::kPendulum: return pendulum_lifting();
  }
  throw ValidationError("no dictionary for example " + example);
}

std::filesystem::path RunConfig::output_path() const {
  std::filesystem::path p(output_dir);
  if (p.is_relative()) {
    if (const char* root = std::getenv("KOOPCTL_OUT"); root && *root) return std::filesystem::path(root) / p;
  }
  return p;
}

}  // namespace koopctl
