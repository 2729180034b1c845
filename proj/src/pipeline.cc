#include "koopctl/pipeline.h"

#include <cmath>
#include <iostream>
#include <numbers>

#include "koopctl/errors.h"
#include "koopctl/io.h"
#include "koopctl/rng.h"

namespace koopctl {

namespace fs = std::filesystem;

namespace {

FittedModel fit_samples(const RunConfig& cfg, Plant plant, Lifting lifting, SampleSet samples) {
  if (lifting.state_dim() != plant.state_dim()) {
    throw ValidationError("lifting state dimension differs from the plant's");
  }
  FitReport rep = fit(build_data_matrices(lifting, samples));
  Surrogate s = rep.surrogate.with_error_bound(cfg.c_r, cfg.delta);
  s.lifting = lifting.descriptor();
  return {std::move(plant), std::move(lifting), std::move(samples), std::move(rep), std::move(s)};
}

double ray_cap(const RunConfig& cfg, const Plant& plant) {
  return cfg.roa_cap > 0.0 ? cfg.roa_cap : default_ray_cap(plant.state_box());
}

double max_level_error(const Matrix& points, const LevelFn& g) {
  double e = 0.0;
  for (Eigen::Index k = 0; k < points.rows(); ++k) {
    e = std::max(e, std::abs(g(points.row(k).transpose()) - 1.0));
  }
  return e;
}

}  // namespace

FittedModel fit_model(const RunConfig& cfg) {
  Plant plant = cfg.make_plant();
  Lifting lifting = cfg.make_lifting();
  SampleSet samples = collect_samples(plant, cfg.samples_per_batch, cfg.seed, cfg.noise);
  return fit_samples(cfg, std::move(plant), std::move(lifting), std::move(samples));
}

UncertaintyRegion make_region(const RunConfig& cfg, const Surrogate& s, Json* log) {
  const int N = s.N();
  if (cfg.region.mode == "heuristic") {
    HeuristicRegion h = procedure1_qz(s, cfg.theorem, cfg.region.Rz, cfg.solver,
                                      cfg.region.trace_scale, cfg.synthesis.epsilon);
    if (log) *log = h.log();
    return h.region;
  }
  const Matrix Q = cfg.region.Qz.value_or(Matrix(-Matrix::Identity(N, N)));
  const Vector S = cfg.region.Sz.value_or(Vector(Vector::Zero(N)));
  if (Q.rows() != N || Q.cols() != N || S.size() != N) {
    throw DimensionError("region dimensions differ from the lifted dimension " + std::to_string(N));
  }
  UncertaintyRegion r(Q, S, cfg.region.Rz);
  if (log) *log = {{"mode", "explicit"}, {"region", r.to_json()}};
  return r;
}

DesignRun run_design(const RunConfig& cfg, const FittedModel& model) {
  Json log;
  UncertaintyRegion region = make_region(cfg, model.surrogate, &log);
  DesignOutcome outcome = synthesize(model.surrogate, region, cfg.theorem, cfg.synthesis, cfg.solver);
  DesignRun run{region, log, std::move(outcome), std::nullopt, 1.0};
  if (run.outcome.design) {
    run.design = run.outcome.design;
    if (cfg.rescale_to_box) {
      RescaleResult r = rescale_to_box(*run.design, model.lifting, model.plant.state_box());
      run.design = r.design;
      run.rescale_factor = r.factor;
    }
  }
  return run;
}

Json design_checks(const RunConfig& cfg, const FittedModel& model, const DesignRun& run) {
  if (!run.design) return Json::object();
  const DesignResult& d = *run.design;
  Json j;
  const DualizationCheck dual = dualization_check(d, model.surrogate, run.region);
  j["dualization"] = {{"max_eig", dual.max_eig}, {"ok", dual.ok}};
  const DecreaseCheck dec = decrease_check(d, model.surrogate, run.region, 200, cfg.seed);
  j["decrease"] = {{"worst", dec.worst}, {"samples", dec.samples}, {"skipped", dec.skipped}, {"ok", dec.ok}};
  const double cap = ray_cap(cfg, model.plant);
  j["containment"] = containment_check(d, run.region, model.lifting, 200, cap, cfg.seed).to_json();
  if (model.lifting.state_dim() == 2) {
    const RoaBoundary b = roa_boundary_2d(d, model.lifting, cfg.roa_resolution, cap);
    j["roa"] = {{"area", polygon_area(b.points)},
                {"open_rays", b.any_open()},
                {"max_level_error", max_level_error(b.points, [&](const Vector& x) {
                   return lyapunov_value(d, model.lifting, x);
                 })}};
  }
  return j;
}

std::vector<Vector> sample_roa_starts(const DesignResult& d, const Lifting& lifting, int count,
                                      std::uint64_t seed, double cap, double v_max) {
  const int n = lifting.state_dim();
  Vector lo(n), hi(n);
  if (n == 2) {
    const RoaBoundary b = roa_boundary_2d(d, lifting, 180, cap);
    lo = b.points.colwise().minCoeff().transpose();
    hi = b.points.colwise().maxCoeff().transpose();
  } else {
    for (int i = 0; i < n; ++i) {
      Vector e = Vector::Zero(n);
      e(i) = 1.0;
      hi(i) = roa_ray(d, lifting, e, cap).radius;
      lo(i) = -roa_ray(d, lifting, -e, cap).radius;
    }
    // Axis radii need not bound the set; widen generously.
    lo *= 3.0;
    hi *= 3.0;
  }
  Rng rng(derive_seed(seed, 0x53544152));
  std::vector<Vector> out;
  long long tries = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++tries > 1000000LL * std::max(1, count)) throw NumericalError("could not sample RoA starts");
    Vector x(n);
    for (int i = 0; i < n; ++i) x(i) = rng.uniform(lo(i), hi(i));
    if (lyapunov_value(d, lifting, x) <= v_max) out.push_back(x);
  }
  return out;
}

Json BatchVerification::to_json() const {
  Json list = Json::array();
  for (size_t k = 0; k < trajectories.size(); ++k) {
    const Trajectory& t = trajectories[k];
    list.push_back({{"x0", vector_to_json(t.x.front())},
                    {"termination", to_string(t.reason)},
                    {"final_norm", t.final_state().norm()},
                    {"t_end", t.t.back()},
                    {"audit", audits[k].to_json()}});
  }
  return {{"total", total},
          {"converged", converged},
          {"audit_passed", audit_passed},
          {"worst_increase", worst_increase},
          {"worst_final_norm", worst_final_norm},
          {"trajectories", list}};
}

BatchVerification verify_batch(const Plant& plant, const DesignResult& d, const Lifting& lifting,
                               const std::vector<Vector>& starts, const SimOptions& sim,
                               double final_tol) {
  BatchVerification b;
  for (const Vector& x0 : starts) {
    Trajectory t = simulate(plant, d, lifting, x0, sim);
    AuditReport a = lyapunov_audit(t);
    ++b.total;
    const double fn = t.final_state().norm();
    if (fn <= final_tol) ++b.converged;
    if (a.pass) ++b.audit_passed;
    b.worst_increase = std::max(b.worst_increase, a.max_increase);
    b.worst_final_norm = std::max(b.worst_final_norm, fn);
    b.trajectories.push_back(std::move(t));
    b.audits.push_back(a);
  }
  return b;
}

Json LqrContrast::to_json() const { return {{"failing_weights", failures}, {"grid", detail}}; }

LqrContrast lqr_contrast(const Plant& plant, const Surrogate& s, const Lifting& lifting,
                         const std::vector<Vector>& starts, const SimOptions& sim,
                         double final_tol) {
  LqrContrast c;
  for (const LqrBaseline& g : lqr_weight_grid(s)) {
    Json runs = Json::array();
    int bad = 0;
    for (const Vector& x0 : starts) {
      const Trajectory t = simulate(
          plant, [&](const Vector& x) { return Vector(g.K * lifting.lift_reduced(x)); }, x0, sim);
      const bool ok = t.final_state().norm() <= final_tol;
      bad += ok ? 0 : 1;
      runs.push_back({{"termination", to_string(t.reason)}, {"final_norm", t.final_state().norm()}});
    }
    if (bad > 0) ++c.failures;
    c.detail.push_back({{"q", g.q},
                        {"r", g.r},
                        {"K", matrix_to_json(g.K)},
                        {"care_residual", g.care.residual},
                        {"non_converged", bad},
                        {"runs", runs}});
  }
  return c;
}

void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& cfg,
                    const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs) {
  Json in = Json::object();
  for (const auto& p : inputs) in[p.filename().string()] = fnv1a_hex(read_text_file(p));
  Json out = Json::array();
  for (const auto& p : outputs) out.push_back(p.filename().string());
  write_json_file(dir / ("manifest_" + command + ".json"),
                  {{"command", command}, {"config", cfg.to_json()}, {"inputs", in}, {"outputs", out}});
}

CommandResult cmd_collect(const RunConfig& cfg) {
  const Plant plant = cfg.make_plant();
  const SampleSet s = collect_samples(plant, cfg.samples_per_batch, cfg.seed, cfg.noise);
  const fs::path dir = cfg.output_path() / "samples";
  write_sample_set(s, dir);
  std::vector<fs::path> outputs;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename().string().rfind("manifest_", 0) != 0) outputs.push_back(e.path());
  }
  std::sort(outputs.begin(), outputs.end());
  write_manifest(dir, "collect", cfg, {}, outputs);
  CommandResult r;
  r.message = "wrote " + std::to_string(s.batches.size()) + " batches of " +
              std::to_string(cfg.samples_per_batch) + " samples to " + dir.string();
  r.summary = {{"batches", s.batches.size()}, {"d", cfg.samples_per_batch}};
  return r;
}

CommandResult cmd_fit(const RunConfig& cfg) {
  const fs::path dir = cfg.output_path();
  const fs::path samples_dir = dir / "samples";
  if (!fs::exists(samples_dir / "samples_meta.json")) {
    return {kExitBadInput, "no samples in " + samples_dir.string() + "; run collect first", {}};
  }
  FittedModel m = fit_samples(cfg, cfg.make_plant(), cfg.make_lifting(), read_sample_set(samples_dir));
  write_json_file(dir / "surrogate.json", m.surrogate.to_json());
  write_json_file(dir / "fit_report.json", m.fit.to_json());
  std::vector<fs::path> inputs;
  for (const auto& e : fs::directory_iterator(samples_dir)) {
    if (e.path().extension() == ".csv" || e.path().filename() == "samples_meta.json") inputs.push_back(e.path());
  }
  std::sort(inputs.begin(), inputs.end());
  write_manifest(dir, "fit", cfg, inputs, {dir / "surrogate.json", dir / "fit_report.json"});
  CommandResult r;
  r.message = "surrogate with N = " + std::to_string(m.surrogate.N()) + " written";
  for (const auto& w : m.fit.warnings) r.message += "\nwarning: " + w;
  r.summary = m.fit.to_json();
  return r;
}

CommandResult cmd_d0(const RunConfig& cfg) {
  const DataRequirement d = compute_d0(cfg.make_plant(), cfg.make_lifting(), cfg.c_r, cfg.delta, cfg.d0);
  const fs::path dir = cfg.output_path();
  write_json_file(dir / "d0.json", d.to_json());
  write_manifest(dir, "d0", cfg, {}, {dir / "d0.json"});
  return {kExitOk, "d0 = " + format_double(d.d0) + " (log10 " + format_double(d.log10_d0) + ")",
          d.to_json()};
}

namespace {

FittedModel load_model(const RunConfig& cfg, std::vector<fs::path>& inputs) {
  const fs::path dir = cfg.output_path();
  const fs::path sp = dir / "surrogate.json";
  if (!fs::exists(sp)) throw IoError("no surrogate at " + sp.string() + "; run fit first");
  inputs.push_back(sp);
  Surrogate s = Surrogate::from_json(read_json_file(sp)).with_error_bound(cfg.c_r, cfg.delta);
  Plant plant = cfg.make_plant();
  Lifting lifting = s.lifting.is_null() ? cfg.make_lifting() : Lifting::from_descriptor(s.lifting);
  return {std::move(plant), std::move(lifting), SampleSet{}, FitReport{s, {}, {}}, s};
}

}  // namespace

CommandResult cmd_design(const RunConfig& cfg) {
  std::vector<fs::path> inputs;
  FittedModel model = load_model(cfg, inputs);
  const fs::path dir = cfg.output_path();
  DesignRun run = run_design(cfg, model);
  Json j = {{"outcome", run.outcome.to_json()},
            {"region", run.region.to_json()},
            {"region_log", run.region_log},
            {"rescale_factor", run.rescale_factor}};
  std::vector<fs::path> outputs = {dir / "design.json"};
  CommandResult r;
  if (run.design) {
    j["design"] = run.design->to_json();
    j["checks"] = design_checks(cfg, model, run);
    if (model.lifting.state_dim() == 2) {
      const double cap = ray_cap(cfg, model.plant);
      write_boundary_dat(dir / "roa.dat", roa_boundary_2d(*run.design, model.lifting, cfg.roa_resolution, cap));
      write_boundary_dat(dir / "region.dat",
                         region_boundary_2d(run.region, model.lifting, cfg.roa_resolution, cap));
      outputs.push_back(dir / "roa.dat");
      outputs.push_back(dir / "region.dat");
    }
    r.message = run.outcome.diagnosis + "\nK = " + matrix_to_json(run.design->K).dump();
    r.summary = j["checks"];
  } else {
    r.exit_code = run.outcome.status == DesignStatus::kVerificationFailure ? kExitVerification
                                                                           : kExitInfeasible;
    r.message = run.outcome.diagnosis;
  }
  write_json_file(dir / "design.json", j);
  write_manifest(dir, "design", cfg, inputs, outputs);
  return r;
}

CommandResult cmd_verify(const RunConfig& cfg) {
  std::vector<fs::path> inputs;
  FittedModel model = load_model(cfg, inputs);
  const fs::path dir = cfg.output_path();
  const fs::path dp = dir / "design.json";
  if (!fs::exists(dp)) return {kExitBadInput, "no design at " + dp.string() + "; run design first", {}};
  inputs.push_back(dp);
  const Json dj = read_json_file(dp);
  if (!dj.contains("design")) return {kExitBadInput, "design.json holds no feasible design", {}};
  const DesignResult d = DesignResult::from_json(dj.at("design"));

  const double cap = ray_cap(cfg, model.plant);
  const std::vector<Vector> starts = sample_roa_starts(d, model.lifting, cfg.verify_starts, cfg.verify_seed, cap);
  SimOptions sim;
  sim.horizon = cfg.verify_horizon;
  const BatchVerification b = verify_batch(model.plant, d, model.lifting, starts, sim);
  std::vector<fs::path> outputs;
  const fs::path tdir = dir / "trajectories";
  for (size_t k = 0; k < b.trajectories.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "traj_%03zu.dat", k);
    write_trajectory_dat(tdir / name, b.trajectories[k]);
    outputs.push_back(tdir / name);
  }
  Json summary = {{"design", b.to_json()}};
  if (cfg.verify_lqr) summary["lqr"] = lqr_contrast(model.plant, model.surrogate, model.lifting, starts, sim).to_json();
  write_json_file(dir / "verify.json", summary);
  outputs.push_back(dir / "verify.json");
  write_manifest(dir, "verify", cfg, inputs, outputs);
  CommandResult r;
  r.summary = summary;
  r.message = std::to_string(b.converged) + "/" + std::to_string(b.total) + " converged, " +
              std::to_string(b.audit_passed) + "/" + std::to_string(b.total) + " passed the Lyapunov audit";
  if (b.converged < b.total || b.audit_passed < b.total) r.exit_code = kExitVerification;
  return r;
}

// ---- figure bundles --------------------------------------------------------

namespace {

Matrix closed_curve(int n, const std::function<Vector(double)>& f) {
  Matrix p(n + 1, 2);
  for (int k = 0; k <= n; ++k) p.row(k) = f(2.0 * std::numbers::pi * k / n).transpose();
  return p;
}

Json fig1(const fs::path& out) {
  const int n = 720;
  Matrix parabola(201, 2);
  for (int k = 0; k <= 200; ++k) {
    const double x = -5.0 + 0.05 * k;
    parabola(k, 0) = x;
    parabola(k, 1) = x * x;
  }
  const double rc = std::sqrt(650.0);
  const Matrix circle = closed_curve(n, [&](double t) { return Vector(Eigen::Vector2d(rc * std::cos(t), rc * std::sin(t))); });
  const double a = std::sqrt(50.0), b = std::sqrt(1250.0);
  const Matrix ellipse = closed_curve(n, [&](double t) { return Vector(Eigen::Vector2d(a * std::cos(t), b * std::sin(t))); });
  write_dat(out / "fig1_parabola.dat", parabola, "d1 d2");
  write_dat(out / "fig1_circle.dat", circle, "d1 d2");
  write_dat(out / "fig1_ellipse.dat", ellipse, "d1 d2");
  return {{"files", {"fig1_parabola.dat", "fig1_circle.dat", "fig1_ellipse.dat"}},
          {"circle", {{"Qz", matrix_to_json(-Matrix::Identity(2, 2))}, {"Rz", 650.0}}},
          {"ellipse", {{"Qz", matrix_to_json(Matrix(Eigen::Vector2d(-0.5 / 25.0, -0.5 / 625.0).asDiagonal()))},
                       {"Rz", 1.0}}}};
}

// Only the backend choice carries over; tolerances stay with the preset.
void use_backend(RunConfig& cfg, const SolverOptions& solver) {
  cfg.solver.backend = solver.backend;
  cfg.solver.external_command = solver.external_command;
  cfg.solver.work_dir = solver.work_dir;
}

// Runs one design and writes its RoA and region polylines.
Json figure_design(const RunConfig& cfg, const FittedModel& model, const fs::path& out,
                   const std::string& tag, std::optional<DesignResult>* keep = nullptr) {
  const DesignRun run = run_design(cfg, model);
  Json j = {{"status", to_string(run.outcome.status)},
            {"diagnosis", run.outcome.diagnosis},
            {"theorem", cfg.theorem},
            {"region", run.region.to_json()},
            {"lifting", model.lifting.descriptor()}};
  const double cap = ray_cap(cfg, model.plant);
  const RoaBoundary region = region_boundary_2d(run.region, model.lifting, cfg.roa_resolution, cap);
  write_boundary_dat(out / (tag + "_region.dat"), region);
  j["region_file"] = tag + "_region.dat";
  if (run.design) {
    const RoaBoundary b = roa_boundary_2d(*run.design, model.lifting, cfg.roa_resolution, cap);
    write_boundary_dat(out / (tag + "_roa.dat"), b);
    j["roa_file"] = tag + "_roa.dat";
    j["design"] = run.design->to_json();
    j["area"] = polygon_area(b.points);
    j["open_rays"] = b.any_open();
    j["checks"] = design_checks(cfg, model, run);
  }
  if (keep) *keep = run.design;
  return j;
}

Json fig2(const fs::path& out, const SolverOptions& solver) {
  RunConfig cfg = RunConfig::preset("cooked_up");
  use_backend(cfg, solver);
  const FittedModel model = fit_model(cfg);
  return {{"config", cfg.to_json()}, {"designs", {{"mu", figure_design(cfg, model, out, "fig2")}}}};
}

Json fig3(const fs::path& out, const SolverOptions& solver) {
  RunConfig cfg = RunConfig::preset("cooked_up_xy");
  use_backend(cfg, solver);
  const FittedModel model = fit_model(cfg);
  Json designs;
  designs["mu1"] = figure_design(cfg, model, out, "fig3_mu1");
  cfg.region.Qz = Matrix(Eigen::Vector4d(-2.5, -2.5, -1.25, -0.005).asDiagonal());
  designs["mu2"] = figure_design(cfg, model, out, "fig3_mu2");
  return {{"config", cfg.to_json()}, {"designs", designs}};
}

Json fig4(const fs::path& out, const SolverOptions& solver) {
  RunConfig cfg = RunConfig::preset("pendulum");
  use_backend(cfg, solver);
  const FittedModel model = fit_model(cfg);
  Json designs;
  cfg.theorem = 1;
  designs["mu1"] = figure_design(cfg, model, out, "fig4_mu1");
  cfg.theorem = 2;
  designs["mu2"] = figure_design(cfg, model, out, "fig4_mu2");
  return {{"config", cfg.to_json()}, {"designs", designs}};
}

Json fig5(const fs::path& out, const SolverOptions& solver) {
  RunConfig cfg = RunConfig::preset("pendulum");
  use_backend(cfg, solver);
  cfg.region.mode = "heuristic";
  cfg.region.Rz = 5.0;
  const FittedModel model = fit_model(cfg);
  Json designs;
  std::optional<DesignResult> mu3, mu4;
  cfg.theorem = 1;
  designs["mu3"] = figure_design(cfg, model, out, "fig5_mu3", &mu3);
  cfg.theorem = 2;
  designs["mu4"] = figure_design(cfg, model, out, "fig5_mu4", &mu4);
  Json j = {{"config", cfg.to_json()}, {"designs", designs}};
  if (!mu3 || !mu4) return j;

  // Four starts at 90% of the smaller of the two RoA radii.
  const double cap = ray_cap(cfg, model.plant);
  std::vector<Vector> starts;
  for (double deg : {30.0, 120.0, 210.0, 300.0}) {
    const double th = deg * std::numbers::pi / 180.0;
    const Vector dir = Eigen::Vector2d(std::cos(th), std::sin(th));
    const double r = std::min(roa_ray(*mu3, model.lifting, dir, cap).radius,
                              roa_ray(*mu4, model.lifting, dir, cap).radius);
    starts.push_back(0.9 * r * dir);
  }
  SimOptions sim;
  const LqrBaseline lqr = lqr_baseline(model.surrogate, 1.0, 1.0);
  Json traj = Json::array();
  for (size_t k = 0; k < starts.size(); ++k) {
    auto emit = [&](const std::string& name, const Trajectory& t) {
      const std::string file = "fig5_traj_" + name + "_" + std::to_string(k) + ".dat";
      write_trajectory_dat(out / file, t);
      traj.push_back({{"controller", name},
                      {"start", k},
                      {"file", file},
                      {"termination", to_string(t.reason)},
                      {"final_norm", t.final_state().norm()}});
    };
    emit("mu3", simulate(model.plant, *mu3, model.lifting, starts[k], sim));
    emit("mu4", simulate(model.plant, *mu4, model.lifting, starts[k], sim));
    emit("lqr", simulate(
                    model.plant,
                    [&](const Vector& x) { return Vector(lqr.K * model.lifting.lift_reduced(x)); },
                    starts[k], sim));
  }
  Json sj = Json::array();
  for (const auto& s : starts) sj.push_back(vector_to_json(s));
  j["starts"] = sj;
  j["trajectories"] = traj;
  j["lqr"] = lqr_contrast(model.plant, model.surrogate, model.lifting, starts, sim).to_json();
  return j;
}

}  // namespace

CommandResult cmd_reproduce(const std::string& figure, const fs::path& out, const SolverOptions& solver) {
  static const std::vector<std::string> all = {"fig1", "fig2", "fig3", "fig4", "fig5"};
  std::vector<std::string> figs;
  if (figure == "all") {
    figs = all;
  } else if (std::find(all.begin(), all.end(), figure) != all.end()) {
    figs = {figure};
  } else {
    return {kExitBadInput, "unknown figure '" + figure + "' (fig1..fig5 or all)", {}};
  }
  fs::create_directories(out);
  CommandResult r;
  for (const auto& f : figs) {
    Json j;
    if (f == "fig1") j = fig1(out);
    if (f == "fig2") j = fig2(out, solver);
    if (f == "fig3") j = fig3(out, solver);
    if (f == "fig4") j = fig4(out, solver);
    if (f == "fig5") j = fig5(out, solver);
    write_json_file(out / (f + ".json"), j);
    r.summary[f] = j;
    if (j.contains("designs")) {
      for (const auto& [name, d] : j.at("designs").items()) {
        if (d.at("status") != "feasible") r.exit_code = kExitInfeasible;
      }
    }
    r.message += (r.message.empty() ? "" : "\n") + f + " -> " + (out / (f + ".json")).string();
  }
  return r;
}

}  // namespace koopctl
