#ifndef D2DTO_HARNESS_HPP_
#define D2DTO_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "d2dto/instance.hpp"
#include "d2dto/montecarlo.hpp"
#include "d2dto/solvers.hpp"

namespace d2dto {

enum class SweepVariable { helpers, alpha };

enum class SolverKind { lagrangian, cost_based, contact_based, exact, lower_bound };

std::string solver_name(SolverKind kind);
std::optional<SolverKind> solver_from_name(const std::string& name);

// Experiment protocol: one generated-instance batch per sweep value, each
// enabled solver run on every instance, objectives averaged per point.
struct SweepConfig {
  SweepVariable variable = SweepVariable::helpers;
  std::vector<double> values;  // helper counts or alpha values
  GeneratorConfig base;        // fixed generator parameters
  int instances_per_point = 100;
  std::vector<SolverKind> solvers = {SolverKind::lagrangian,
                                     SolverKind::cost_based,
                                     SolverKind::contact_based};
  SolverParams solver_params;
  std::uint64_t base_seed = 0;

  void validate() const;  // throws ValidationError
};

struct SweepRow {
  double sweep_value = 0.0;
  std::string solver;
  double mean_cost = 0.0;
  double stderr_cost = 0.0;
  std::optional<double> mean_lower_bound;  // lagrangian rows only
};

// Runs the sweep. Replicate seeds derive from (base seed, point index,
// replicate index); rows come out ordered by sweep value, then by a fixed
// solver order.
std::vector<SweepRow> run_sweep(const SweepConfig& config);

std::string sweep_csv(const std::vector<SweepRow>& rows);
void write_sweep_csv(const std::vector<SweepRow>& rows,
                     const std::filesystem::path& path);

// Relative-timer distribution experiment: for each alpha, the empirical CDF
// of t*/deadline over all helper-assigned requesters, on the fixed grid
// {0, 0.05, ..., 1}.
struct TimerCdfConfig {
  std::vector<double> alphas;
  GeneratorConfig base;
  int instances_per_point = 100;
  SolverParams solver_params;
  std::uint64_t base_seed = 0;

  void validate() const;
};

struct TimerCdfRow {
  double alpha = 0.0;
  double relative_timer = 0.0;       // grid point
  double cumulative_fraction = 0.0;  // P(t*/d <= grid) among assigned
  long long assigned_count = 0;      // helper-assigned requesters at this alpha
};

std::vector<TimerCdfRow> timer_cdf(const TimerCdfConfig& config);

std::string timer_cdf_csv(const std::vector<TimerCdfRow>& rows);
void write_timer_cdf_csv(const std::vector<TimerCdfRow>& rows,
                         const std::filesystem::path& path);

// One-shot solve of a single instance, with an optional exact-optimum
// comparison for small instances.
struct SolveSummary {
  std::string solver;
  Assignment assignment;
  std::optional<DualState> dual;         // lagrangian only
  std::optional<double> exact_objective; // when requested and within guard
  int helper_assigned = 0;
  int server_assigned = 0;

  // Gap of the objective versus the dual lower bound or the exact optimum,
  // as a percentage; absent when neither reference is available.
  std::optional<double> gap_percent() const;

  std::string to_text() const;
};

SolveSummary solve_one(const Instance& instance, const PairTable& table,
                       SolverKind kind, const SolverParams& params,
                       bool compute_exact);

// Deterministic replicate seed derivation shared by sweep and CDF runs.
std::uint64_t replicate_seed(std::uint64_t base_seed, int point_index,
                             int replicate_index);

}  // namespace d2dto

#endif  // D2DTO_HARNESS_HPP_
