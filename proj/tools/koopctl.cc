// koopctl: data-driven robust controller synthesis for input-affine plants.
#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "koopctl/errors.h"
#include "koopctl/io.h"
#include "koopctl/pipeline.h"

using namespace koopctl;

namespace {

struct Overrides {
  std::string config_path;
  std::string preset;
  std::string out;
  std::optional<std::string> example;
  std::optional<int> d;
  std::optional<std::uint64_t> seed;
  std::optional<double> noise;
  std::optional<double> c_r;
  std::optional<double> delta;
  std::optional<int> theorem;
  std::optional<std::string> region_mode;
  std::optional<double> Rz;
  std::optional<double> epsilon;
  bool no_invariance = false;
  bool freeze_Lw = false;
  bool maximize_min_eig_P = false;
  bool rescale = false;
  std::optional<std::string> solver_command;
  std::optional<double> variable_box;
  std::optional<int> roa_resolution;
  std::optional<int> starts;
  std::optional<double> horizon;
  bool no_lqr = false;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("-c,--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  sub->add_option("-p,--preset", o.preset, "cooked_up | cooked_up_xy | pendulum");
  sub->add_option("-o,--out", o.out, "output directory");
  sub->add_option("--example", o.example, "plant name");
  sub->add_option("-d,--samples", o.d, "samples per constant input");
  sub->add_option("--seed", o.seed, "sampling seed");
  sub->add_option("--noise", o.noise, "derivative noise bound");
  sub->add_option("--c-r", o.c_r, "remainder Lipschitz constant");
  sub->add_option("--delta", o.delta, "failure probability");
  sub->add_option("--theorem", o.theorem, "1 or 2")->check(CLI::IsMember({1, 2}));
  sub->add_option("--region", o.region_mode, "explicit | heuristic")
      ->check(CLI::IsMember({"explicit", "heuristic"}));
  sub->add_option("--Rz", o.Rz, "region radius term");
  sub->add_option("--epsilon", o.epsilon, "strictness margin");
  sub->add_flag("--no-invariance", o.no_invariance, "drop the containment constraint");
  sub->add_flag("--freeze-Lw", o.freeze_Lw, "theorem 2 with L_w = 0");
  sub->add_flag("--maximize-min-eig-P", o.maximize_min_eig_P, "optimize instead of centering");
  sub->add_flag("--rescale-to-box", o.rescale, "shrink the RoA into the state box");
  sub->add_option("--solver-command", o.solver_command, "external SDPA solver command");
  sub->add_option("--variable-box", o.variable_box, "bound on every decision scalar");
  sub->add_option("--roa-resolution", o.roa_resolution, "rays for 2-D boundaries");
  sub->add_option("--starts", o.starts, "verification starts");
  sub->add_option("--horizon", o.horizon, "simulation horizon");
  sub->add_flag("--no-lqr", o.no_lqr, "skip the LQR baseline");
}

RunConfig resolve(const Overrides& o) {
  RunConfig cfg;
  if (!o.config_path.empty()) {
    Json j = read_json_file(o.config_path);
    if (!o.preset.empty()) j["preset"] = o.preset;
    cfg = RunConfig::from_json(j);
  } else if (!o.preset.empty()) {
    cfg = RunConfig::preset(o.preset);
  }
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.example) cfg.example = *o.example;
  if (o.d) cfg.samples_per_batch = *o.d;
  if (o.seed) cfg.seed = *o.seed;
  if (o.noise) cfg.noise = *o.noise;
  if (o.c_r) cfg.c_r = *o.c_r;
  if (o.delta) cfg.delta = *o.delta;
  if (o.theorem) cfg.theorem = *o.theorem;
  if (o.region_mode) cfg.region.mode = *o.region_mode;
  if (o.Rz) cfg.region.Rz = *o.Rz;
  if (o.epsilon) cfg.synthesis.epsilon = *o.epsilon;
  if (o.no_invariance) cfg.synthesis.include_invariance = false;
  if (o.freeze_Lw) cfg.synthesis.freeze_Lw = true;
  if (o.maximize_min_eig_P) {
    cfg.synthesis.maximize_min_eig_P = true;
    cfg.solver.center = false;
  }
  if (o.rescale) cfg.rescale_to_box = true;
  if (o.solver_command) {
    cfg.solver.backend = SolverOptions::Backend::kExternal;
    cfg.solver.external_command = *o.solver_command;
  }
  if (o.variable_box) cfg.solver.variable_box = *o.variable_box;
  if (o.roa_resolution) cfg.roa_resolution = *o.roa_resolution;
  if (o.starts) cfg.verify_starts = *o.starts;
  if (o.horizon) cfg.verify_horizon = *o.horizon;
  if (o.no_lqr) cfg.verify_lqr = false;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"koopctl: lifted bilinear surrogates and robust state feedback from data"};
  app.require_subcommand(1);
  bool print_summary = false;
  app.add_flag("--json", print_summary, "print the command summary as JSON");

  Overrides o;
  std::string figure = "all";
  std::map<std::string, std::function<CommandResult(const RunConfig&)>> commands = {
      {"collect", cmd_collect}, {"fit", cmd_fit}, {"d0", cmd_d0}, {"design", cmd_design}, {"verify", cmd_verify}};
  const std::map<std::string, std::string> help = {
      {"collect", "sample derivative data under constant inputs"},
      {"fit", "fit the bilinear surrogate from collected samples"},
      {"d0", "data length for the remainder bound"},
      {"design", "solve the synthesis LMIs and export the controller"},
      {"verify", "simulate the closed loop from RoA starts"},
  };
  for (const auto& [name, text] : help) add_common(app.add_subcommand(name, text), o);
  CLI::App* rep = app.add_subcommand("reproduce", "regenerate figure data");
  rep->add_option("figure", figure, "fig1..fig5 or all");
  add_common(rep, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitBadInput;
  }

  try {
    const RunConfig cfg = resolve(o);
    CLI::App* sub = app.get_subcommands().front();
    CommandResult r;
    if (sub->get_name() == "reproduce") {
      r = cmd_reproduce(figure, o.out.empty() ? cfg.output_path() : std::filesystem::path(o.out), cfg.solver);
    } else {
      r = commands.at(sub->get_name())(cfg);
    }
    if (!r.message.empty()) (r.exit_code == kExitOk ? std::cout : std::cerr) << r.message << "\n";
    if (print_summary) std::cout << r.summary.dump(2) << "\n";
    return r.exit_code;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const DimensionError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const IoError& e) {
    std::cerr << "io: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
