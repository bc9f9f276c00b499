#ifndef D2DTO_SOLVERS_HPP_
#define D2DTO_SOLVERS_HPP_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "d2dto/cost_model.hpp"
#include "d2dto/instance.hpp"

namespace d2dto {

// Requester choice value for "offload to the remote server".
inline constexpr int kServerChoice = -1;

// One assignment of every requester to a helper index or the server.
struct Assignment {
  std::vector<int> choice;  // per requester: helper index or kServerChoice
  double objective = 0.0;   // total expected cost of the assignment
  bool feasible = false;    // helper energy budgets respected

  bool operator==(const Assignment&) const = default;
};

// Preprocessed pair evaluations: optimal timer, cost and energy per
// requester-helper pair, plus the per-requester server fallback cost.
struct PairTable {
  int num_requesters = 0;
  int num_helpers = 0;
  std::vector<PairEvaluation> evals;  // row-major R x H
  std::vector<double> server_cost;    // per requester

  const PairEvaluation& at(int requester, int helper) const {
    return evals[static_cast<size_t>(requester) * num_helpers + helper];
  }
};

// Runs the timer scan for every pair. Work is O(R * H * max deadline).
PairTable evaluate_all_pairs(const Instance& instance);

// Energy slack tolerated when checking helper budgets (Joules).
inline constexpr double kEnergySlack = 1e-9;

// Exact objective of a choice vector under the given pair table, summed in
// requester order.
double assignment_objective(const PairTable& table, std::span<const int> choice);

// Expected energy load placed on each helper by a choice vector.
std::vector<double> helper_loads(const PairTable& table, std::span<const int> choice);

// True when every helper load fits its budget within kEnergySlack.
bool assignment_feasible(const PairTable& table, std::span<const int> choice,
                         std::span<const double> helper_energy);

// Builds a full Assignment (objective + feasibility) from a choice vector.
Assignment make_assignment(const PairTable& table, std::vector<int> choice,
                           std::span<const double> helper_energy);

// Subgradient iteration controls.
struct SolverParams {
  int max_iterations = 500;             // K
  double subgradient_tolerance = 1e-6;  // epsilon_1, on ||d||
  double multiplier_tolerance = 1e-6;   // epsilon_2, on ||u_next - u||
  double step_scale = 1.0;              // eta in (0, 2)
  std::vector<double> initial_multipliers;  // empty = zeros

  void validate(int num_helpers) const;  // throws ValidationError
};

struct RelaxationResult {
  double dual_value = 0.0;  // L(u)
  Assignment assignment;    // minimizer, ignoring energy budgets
};

// Solves the energy-relaxed problem at multipliers u: each requester picks
// the cheapest of {helpers priced cost + u_h * energy, server}. Ties go to
// the server, then to the lowest helper index.
RelaxationResult solve_relaxation(const PairTable& table,
                                  std::span<const double> helper_energy,
                                  std::span<const double> multipliers);

// d_h = (expected load on h under the assignment) - E_h.
std::vector<double> subgradient(const PairTable& table,
                                const Assignment& assignment,
                                std::span<const double> helper_energy);

// Polyak step length max{0, eta * (upper_bound - dual_value) / ||d||^2}.
// The direction must be nonzero; callers treat ||d|| = 0 as converged.
double polyak_step(double upper_bound, double dual_value,
                   std::span<const double> direction, double step_scale);

// Moves tasks off overloaded helpers until every budget holds. Helpers are
// processed in descending violation; within a helper the task with the
// smallest reassignment penalty moves to its cheapest fitting alternative
// (the server always fits).
Assignment repair(const Assignment& assignment, const PairTable& table,
                  std::span<const double> helper_energy);

struct TraceRow {
  int iteration = 0;
  double dual_value = 0.0;       // L(u) at this iteration
  double lower_bound = 0.0;      // best L(u) so far
  double upper_bound = 0.0;      // best feasible objective so far
  double step = 0.0;
  double subgradient_norm = 0.0;
};

// Dual ascent state returned by lagrangian_solve.
struct DualState {
  std::vector<double> multipliers;       // final u, componentwise >= 0
  double lower_bound = 0.0;              // best dual value
  double upper_bound = 0.0;              // incumbent objective
  Assignment incumbent;                  // best feasible assignment
  int iterations = 0;
  std::vector<double> last_subgradient;
  std::vector<TraceRow> trace;

  double gap() const {
    return upper_bound == 0.0 ? 0.0 : (upper_bound - lower_bound) / upper_bound;
  }
};

// Subgradient optimization of the dualized energy constraints with
// per-iteration repair; the incumbent is the best repaired solution seen.
DualState lagrangian_solve(const Instance& instance, const PairTable& table,
                           const SolverParams& params = {});
DualState lagrangian_solve(const Instance& instance,
                           const SolverParams& params = {});

// Per-task scalar used to order tasks in the greedy baselines: the best
// value over helpers (as published) or the mean over helpers.
enum class BaselineOrdering { best_over_helpers, mean_over_helpers };

// Greedy baseline: tasks in descending order of expected completion cost,
// each placed on its cheapest helper with enough residual energy when that
// beats the server.
Assignment cost_based_baseline(const Instance& instance, const PairTable& table,
                               BaselineOrdering ordering = BaselineOrdering::best_over_helpers);

// Greedy baseline: tasks in descending order of contact rate, each placed on
// its best-connected fitting helper that beats the server.
Assignment contact_based_baseline(const Instance& instance, const PairTable& table,
                                  BaselineOrdering ordering = BaselineOrdering::best_over_helpers);

// Exhaustive optimum over all (H+1)^R assignments. Guarded: throws SizeError
// when R * log2(H + 1) exceeds 30.
Assignment exact_solve(const Instance& instance, const PairTable& table);

// Solution/trace export: JSON document with per-requester choice, the chosen
// pair's timer, objective and bounds, plus the iteration trace when present.
std::string solution_to_json(const std::string& solver_name,
                             const PairTable& table, const Assignment& assignment,
                             const DualState* dual = nullptr);
void save_solution(const std::string& solver_name, const PairTable& table,
                   const Assignment& assignment, const DualState* dual,
                   const std::filesystem::path& path);

// Parsed solution file contents (choices plus recorded bounds), used by the
// CLI validate flow.
struct SolutionFile {
  std::string solver;
  std::vector<int> choice;
  double objective = 0.0;
  bool feasible = false;
  std::optional<double> lower_bound;
  std::optional<double> upper_bound;
};

SolutionFile solution_from_json(const std::string& text);
SolutionFile load_solution(const std::filesystem::path& path);

}  // namespace d2dto

#endif  // D2DTO_SOLVERS_HPP_
