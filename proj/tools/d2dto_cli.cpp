// Command line front end: instance generation, solving, experiment sweeps
// and Monte Carlo validation of solutions.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "d2dto/errors.hpp"
#include "d2dto/harness.hpp"
#include "d2dto/instance.hpp"
#include "d2dto/montecarlo.hpp"
#include "d2dto/solvers.hpp"

namespace {

using namespace d2dto;

void add_generator_options(CLI::App* cmd, GeneratorConfig& cfg) {
  cmd->add_option("-R,--requesters", cfg.num_requesters, "Number of requesters")
      ->capture_default_str();
  cmd->add_option("-H,--helpers", cfg.num_helpers, "Number of helpers")
      ->capture_default_str();
  cmd->add_option("-T,--horizon", cfg.horizon, "Number of time slots")
      ->capture_default_str();
  cmd->add_option("--slot-duration", cfg.slot_duration, "Slot duration in time units")
      ->capture_default_str();
  cmd->add_option("--alpha", cfg.alpha, "Completion cost weight, f(t) = alpha t^2")
      ->capture_default_str();
  cmd->add_option("--helper-energy-min", cfg.helper_energy_min_j,
                  "Helper energy budget lower bound (J)")
      ->capture_default_str();
  cmd->add_option("--helper-energy-max", cfg.helper_energy_max_j,
                  "Helper energy budget upper bound (J)")
      ->capture_default_str();
  cmd->add_option("--data-size-min", cfg.data_size_min_mb, "Task data size lower bound (MB)")
      ->capture_default_str();
  cmd->add_option("--data-size-max", cfg.data_size_max_mb, "Task data size upper bound (MB)")
      ->capture_default_str();
  cmd->add_option("--cycles-per-bit-min", cfg.cycles_per_bit_min,
                  "CPU cycles per bit lower bound")
      ->capture_default_str();
  cmd->add_option("--cycles-per-bit-max", cfg.cycles_per_bit_max,
                  "CPU cycles per bit upper bound")
      ->capture_default_str();
  cmd->add_option("--energy-per-cycle", cfg.energy_per_cycle_j,
                  "Energy per CPU cycle (J)")
      ->capture_default_str();
  cmd->add_option("--energy-per-bit", cfg.energy_per_bit_j,
                  "Energy per transmitted bit (J)")
      ->capture_default_str();
  cmd->add_option("--helper-proc-cost-factor", cfg.helper_proc_cost_factor,
                  "Helper processing cost as a multiple of e^p")
      ->capture_default_str();
  cmd->add_option("--server-proc-cost-factor", cfg.server_proc_cost_factor,
                  "Server processing cost as a multiple of e^p")
      ->capture_default_str();
  cmd->add_option("--bs-comm-cost-factor", cfg.bs_comm_cost_factor,
                  "BS communication cost as a multiple of e^c")
      ->capture_default_str();
  cmd->add_option("--server-comm-cost-factor", cfg.server_comm_cost_factor,
                  "Server communication cost as a multiple of e^c")
      ->capture_default_str();
  cmd->add_option("--deadline-min", cfg.deadline_min, "Deadline lower bound (slots)")
      ->capture_default_str();
  cmd->add_option("--deadline-max", cfg.deadline_max, "Deadline upper bound (slots)")
      ->capture_default_str();
  cmd->add_option("--gamma-shape", cfg.contact_rate_shape, "Contact rate Gamma shape")
      ->capture_default_str();
  cmd->add_option("--gamma-scale", cfg.contact_rate_scale, "Contact rate Gamma scale")
      ->capture_default_str();
}

void add_solver_options(CLI::App* cmd, SolverParams& params) {
  cmd->add_option("--max-iterations", params.max_iterations,
                  "Subgradient iteration cap")
      ->capture_default_str();
  cmd->add_option("--eta", params.step_scale, "Polyak step scale in (0, 2)")
      ->capture_default_str();
  cmd->add_option("--eps1", params.subgradient_tolerance,
                  "Stop when the subgradient norm falls below this")
      ->capture_default_str();
  cmd->add_option("--eps2", params.multiplier_tolerance,
                  "Stop when the multiplier update norm falls below this")
      ->capture_default_str();
}

std::vector<SolverKind> parse_solver_list(const std::vector<std::string>& names) {
  std::vector<SolverKind> kinds;
  for (const std::string& name : names) {
    const auto kind = solver_from_name(name);
    if (!kind.has_value()) {
      throw ValidationError({"unknown solver '" + name + "'"});
    }
    kinds.push_back(*kind);
  }
  return kinds;
}

int run_generate(const GeneratorConfig& cfg, const std::string& output) {
  const Instance inst = generate(cfg);
  save_instance(inst, output);
  std::printf("wrote %s (R=%d, H=%d, T=%d)\n", output.c_str(),
              inst.num_requesters(), inst.num_helpers(), inst.horizon);
  return 0;
}

int run_solve(const std::string& instance_path, const std::string& solver,
              const SolverParams& params, bool with_exact,
              const std::string& output) {
  const auto kind = solver_from_name(solver);
  if (!kind.has_value() || *kind == SolverKind::lower_bound) {
    throw ValidationError({"unknown solver '" + solver + "'"});
  }
  const Instance inst = load_instance(instance_path);
  const PairTable table = evaluate_all_pairs(inst);
  const SolveSummary summary = solve_one(inst, table, *kind, params, with_exact);
  std::printf("%s", summary.to_text().c_str());
  if (!output.empty()) {
    save_solution(summary.solver, table, summary.assignment,
                  summary.dual.has_value() ? &*summary.dual : nullptr, output);
    std::printf("solution written to %s\n", output.c_str());
  }
  return 0;
}

int run_sweep_cmd(SweepConfig config, const std::string& variable,
                  const std::vector<std::string>& solver_names,
                  std::string output) {
  if (variable == "H" || variable == "helpers") {
    config.variable = SweepVariable::helpers;
  } else if (variable == "alpha") {
    config.variable = SweepVariable::alpha;
  } else {
    throw ValidationError({"sweep variable must be 'H' or 'alpha'"});
  }
  if (!solver_names.empty()) {
    config.solvers = parse_solver_list(solver_names);
  }
  if (output.empty()) {
    output = config.variable == SweepVariable::helpers ? "fig2_cost_vs_H.csv"
                                                       : "fig3_cost_vs_alpha.csv";
  }
  const std::vector<SweepRow> rows = run_sweep(config);
  write_sweep_csv(rows, output);
  std::printf("wrote %s (%zu rows)\n", output.c_str(), rows.size());
  return 0;
}

int run_timer_cdf(const TimerCdfConfig& config, const std::string& output) {
  const std::vector<TimerCdfRow> rows = timer_cdf(config);
  write_timer_cdf_csv(rows, output);
  std::printf("wrote %s (%zu rows)\n", output.c_str(), rows.size());
  return 0;
}

int run_validate(const std::string& instance_path, const std::string& solution_path,
                 long long trials, std::uint64_t seed, double z_threshold) {
  const Instance inst = load_instance(instance_path);
  const PairTable table = evaluate_all_pairs(inst);
  const SolutionFile solution = load_solution(solution_path);
  if (static_cast<int>(solution.choice.size()) != table.num_requesters) {
    throw ValidationError({"solution assignment size does not match the instance"});
  }
  const Assignment assignment =
      make_assignment(table, solution.choice, inst.helper_energy);
  if (std::abs(assignment.objective - solution.objective) >
      1e-9 * std::max(1.0, std::abs(solution.objective))) {
    std::printf("note: recorded objective %.10g differs from recomputed %.10g\n",
                solution.objective, assignment.objective);
  }
  const ValidationReport report =
      validate_assignment(inst, assignment, table, trials, seed, z_threshold);
  std::printf("%s", report.to_text().c_str());
  return report.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Base-station-assisted D2D task offloading: model, solvers and experiments"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read defaults from a config file");

  int exit_code = 0;

  // generate
  auto* generate_cmd = app.add_subcommand("generate", "Generate a random instance file");
  GeneratorConfig gen_cfg;
  std::string gen_output = "instance.json";
  add_generator_options(generate_cmd, gen_cfg);
  generate_cmd->add_option("--seed", gen_cfg.seed, "RNG seed")->capture_default_str();
  generate_cmd->add_option("-o,--output", gen_output, "Instance file to write")
      ->capture_default_str();
  generate_cmd->callback([&]() { exit_code = run_generate(gen_cfg, gen_output); });

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "Solve an instance file");
  std::string solve_instance;
  std::string solve_solver = "lagrangian";
  std::string solve_output;
  bool solve_exact = false;
  SolverParams solve_params;
  solve_cmd->add_option("instance", solve_instance, "Instance file")->required();
  solve_cmd->add_option("--solver", solve_solver,
                        "lagrangian | cost_based | contact_based | exact")
      ->capture_default_str();
  add_solver_options(solve_cmd, solve_params);
  solve_cmd->add_flag("--exact", solve_exact,
                      "Also compute the exact optimum for the gap report");
  solve_cmd->add_option("-o,--output", solve_output, "Solution file to write");
  solve_cmd->callback([&]() {
    exit_code = run_solve(solve_instance, solve_solver, solve_params, solve_exact,
                          solve_output);
  });

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a multi-instance sweep to CSV");
  SweepConfig sweep_config;
  std::string sweep_variable = "H";
  std::vector<std::string> sweep_solvers;
  std::string sweep_output;
  add_generator_options(sweep_cmd, sweep_config.base);
  add_solver_options(sweep_cmd, sweep_config.solver_params);
  sweep_cmd->add_option("--variable", sweep_variable, "Sweep variable: H or alpha")
      ->capture_default_str();
  sweep_cmd->add_option("--values", sweep_config.values, "Sweep values")
      ->required()
      ->expected(-1);
  sweep_cmd->add_option("--instances", sweep_config.instances_per_point,
                        "Instances per sweep point")
      ->capture_default_str();
  sweep_cmd->add_option("--solvers", sweep_solvers,
                        "Solvers to run (default lagrangian cost_based contact_based)")
      ->expected(-1);
  sweep_cmd->add_option("--seed", sweep_config.base_seed, "Base seed")
      ->capture_default_str();
  sweep_cmd->add_option("-o,--output", sweep_output,
                        "CSV file (default fig2_cost_vs_H.csv / fig3_cost_vs_alpha.csv)");
  sweep_cmd->callback([&]() {
    exit_code = run_sweep_cmd(sweep_config, sweep_variable, sweep_solvers, sweep_output);
  });

  // timer-cdf
  auto* cdf_cmd = app.add_subcommand(
      "timer-cdf", "Empirical CDF of relative timers of helper-assigned requesters");
  TimerCdfConfig cdf_config;
  std::string cdf_output = "fig4_timer_cdf.csv";
  add_generator_options(cdf_cmd, cdf_config.base);
  add_solver_options(cdf_cmd, cdf_config.solver_params);
  cdf_cmd->add_option("--alphas", cdf_config.alphas, "Completion cost weights")
      ->required()
      ->expected(-1);
  cdf_cmd->add_option("--instances", cdf_config.instances_per_point,
                      "Instances per alpha")
      ->capture_default_str();
  cdf_cmd->add_option("--seed", cdf_config.base_seed, "Base seed")->capture_default_str();
  cdf_cmd->add_option("-o,--output", cdf_output, "CSV file to write")
      ->capture_default_str();
  cdf_cmd->callback([&]() { exit_code = run_timer_cdf(cdf_config, cdf_output); });

  // validate
  auto* validate_cmd = app.add_subcommand(
      "validate", "Monte Carlo validation of a solution against its instance");
  std::string validate_instance;
  std::string validate_solution;
  long long validate_trials = 100000;
  std::uint64_t validate_seed = 0;
  double validate_z = 4.0;
  validate_cmd->add_option("instance", validate_instance, "Instance file")->required();
  validate_cmd->add_option("solution", validate_solution, "Solution file")->required();
  validate_cmd->add_option("--trials", validate_trials, "Trials per simulated pair")
      ->capture_default_str();
  validate_cmd->add_option("--seed", validate_seed, "RNG seed")->capture_default_str();
  validate_cmd->add_option("--z-threshold", validate_z, "Flagging threshold")
      ->capture_default_str();
  validate_cmd->callback([&]() {
    exit_code = run_validate(validate_instance, validate_solution, validate_trials,
                             validate_seed, validate_z);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return exit_code;
}
