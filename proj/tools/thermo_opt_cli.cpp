// Batch front-end: mesh-info, simulate, optimize.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "thermo_opt.hpp"
#include "thermo_opt/config.hpp"

namespace fs = std::filesystem;
using namespace thermo_opt;

namespace {

enum ExitCode : int { kOk = 0, kError = 1, kNotConverged = 2, kStall = 3, kCallbackFailure = 4 };

struct Options {
  std::string config;
  bool verbose = false;
  unsigned workers = 1;
  std::string guess;
  std::string schedule_csv;
};

void log(const Options& opt, const std::string& msg) {
  if (opt.verbose) std::cerr << msg << '\n';
}

fs::path prepare_output(const RunConfig& cfg, const Options& opt) {
  const fs::path dir = resolve_path(cfg, cfg.output.directory);
  fs::create_directories(dir);
  fs::copy_file(opt.config, dir / "config.echo", fs::copy_options::overwrite_existing);
  return dir;
}

ForwardModel build_model(const RunConfig& cfg, const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  Mesh mesh = load_mesh(cfg);
  for (const auto& w : mesh.warnings) std::cerr << "warning: " << w << '\n';
  ForwardModel model(mesh, cfg.material, cfg.ocp.steps, cfg.ocp.t_f, cfg.forward);
  for (const auto& w : model.heat().warnings()) std::cerr << "warning: " << w << '\n';
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  log(opt, "model ready: " + std::to_string(model.mesh().tets.size()) + " tets, setup " + std::to_string(secs) + " s");
  return model;
}

void write_results(const fs::path& dir, const RunConfig& cfg, const ForwardModel& model, const EvaluationRecord& rec) {
  write_controls_csv((dir / "controls.csv").string(), rec, cfg.material.T0);
  if (!cfg.output.vtk || !rec.trajectories) return;
  const auto& traj = *rec.trajectories;
  for (std::size_t n = 0; n < traj.mechanical.snapshots.size(); ++n) {
    char name[32];
    std::snprintf(name, sizeof name, "step_%04zu.vtk", n);
    write_vtk((dir / name).string(), model.mesh(), traj.thermal.fields[n], traj.mechanical.snapshots[n]);
  }
}

void print_record(const EvaluationRecord& rec, const OcpProblem& p) {
  std::cout << std::setprecision(10) << "J_MPa: " << rec.J << '\n'
            << "argmax_step: " << rec.argmax_step << '\n'
            << "max_T_final_C: " << (rec.max_T.empty() ? 0.0 : rec.max_T.back()) << '\n'
            << "max_scaled_violation: " << rec.constraints.max_scaled_violation(p) << '\n';
  if (!rec.trajectories) return;
  for (const auto& w : rec.trajectories->thermal.warnings) std::cerr << "warning: " << w << '\n';
}

int cmd_mesh_info(const Options& opt) {
  const RunConfig cfg = load_run_config(opt.config);
  const Mesh mesh = load_mesh(cfg);
  for (const auto& w : mesh.warnings) std::cerr << "warning: " << w << '\n';
  write_mesh_stats(std::cout, mesh_stats(mesh));
  return kOk;
}

int cmd_simulate(const Options& opt) {
  const RunConfig cfg = load_run_config(opt.config);
  ControlSchedule schedule;
  if (!opt.schedule_csv.empty()) {
    schedule = read_schedule_csv(opt.schedule_csv);
  } else if (opt.guess == "zero") {
    schedule = ControlSchedule::constant(cfg.ocp.steps, cfg.ocp.t_f, 0.0, 0.0);
  } else {
    schedule = initial_guess(opt.guess.empty() ? cfg.initial_guess : parse_guess_kind(opt.guess), cfg.ocp);
  }
  const ForwardModel model = build_model(cfg, opt);
  const fs::path dir = prepare_output(cfg, opt);
  const EvaluationRecord rec = evaluate(model, cfg.ocp, schedule, true);
  if (rec.failed) throw Error(ErrorCode::ForwardModelFailure, rec.message);
  write_results(dir, cfg, model, rec);
  print_record(rec, cfg.ocp);
  return kOk;
}

int cmd_optimize(const Options& opt) {
  RunConfig cfg = load_run_config(opt.config);
  cfg.sqp.workers = opt.workers;
  if (opt.verbose) {
    cfg.sqp.on_iteration = [&](const SqpIteration& it) {
      std::cerr << "iter " << it.iter << "  J " << it.f * cfg.ocp.stress_scale << " MPa  viol " << it.max_violation
                << "  step " << it.step_norm << "  evals " << it.evaluations
                << (it.line_search_failed ? "  line search failed" : "") << '\n';
    };
  }
  const ControlSchedule x0 =
      initial_guess(opt.guess.empty() ? cfg.initial_guess : parse_guess_kind(opt.guess), cfg.ocp);
  const ForwardModel model = build_model(cfg, opt);
  const fs::path dir = prepare_output(cfg, opt);

  const EvaluationRecord start = evaluate(model, cfg.ocp, x0);
  write_controls_csv((dir / "initial_controls.csv").string(), start, cfg.material.T0);
  const OptimizationResult res = optimize(model, cfg.ocp, x0, cfg.sqp);
  write_iterations_csv((dir / "iterations.csv").string(), res.sqp, cfg.ocp.stress_scale);
  write_results(dir, cfg, model, res.final_record);

  std::cout << "status: " << to_string(res.sqp.status) << '\n'
            << "message: " << res.sqp.message << '\n'
            << "iterations: " << res.sqp.iterations << '\n'
            << "evaluations: " << res.sqp.evaluations << '\n'
            << "J_initial_MPa: " << std::setprecision(10) << start.J << '\n';
  print_record(res.final_record, cfg.ocp);
  switch (res.sqp.status) {
    case SqpStatus::Converged: return kOk;
    case SqpStatus::NotConverged: return kNotConverged;
    case SqpStatus::NonsmoothStall: return kStall;
    case SqpStatus::CallbackFailure: return kCallbackFailure;
  }
  return kError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transient thermo-mechanical FEM and start-up schedule optimizer"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opt;
  app.add_flag("-v,--verbose", opt.verbose, "Progress messages on stderr");
  app.add_option("-w,--workers", opt.workers, "Concurrent forward evaluations")->check(CLI::PositiveNumber);

  auto* info = app.add_subcommand("mesh-info", "Print mesh statistics");
  info->add_option("-c,--config", opt.config, "Run config (JSON)")->required()->check(CLI::ExistingFile);

  auto* sim = app.add_subcommand("simulate", "Run the forward model for one schedule");
  sim->add_option("-c,--config", opt.config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  auto* guess = sim->add_option("-g,--guess", opt.guess, "linear-ramp | heat-first | zero")
                    ->check(CLI::IsMember({"linear-ramp", "heat-first", "zero"}));
  sim->add_option("-s,--schedule", opt.schedule_csv, "Schedule CSV (step,time_s,T_e_C,omega_Hz)")
      ->check(CLI::ExistingFile)
      ->excludes(guess);

  auto* optc = app.add_subcommand("optimize", "Minimize the peak von Mises stress");
  optc->add_option("-c,--config", opt.config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  optc->add_option("-g,--guess", opt.guess, "Initial guess: linear-ramp | heat-first")
      ->check(CLI::IsMember({"linear-ramp", "heat-first"}));

  CLI11_PARSE(app, argc, argv);
  try {
    if (info->parsed()) return cmd_mesh_info(opt);
    if (sim->parsed()) return cmd_simulate(opt);
    if (optc->parsed()) return cmd_optimize(opt);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return kError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
  return kError;
}
