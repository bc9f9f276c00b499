#ifndef D2DTO_MONTECARLO_HPP_
#define D2DTO_MONTECARLO_HPP_

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "d2dto/cost_model.hpp"
#include "d2dto/instance.hpp"
#include "d2dto/solvers.hpp"

namespace d2dto {

// How a trial draws the contact pattern. Both describe the same process;
// keeping two paths guards the slotting semantics.
enum class SamplingMethod {
  slot_poisson,       // independent Poisson counts per slot
  exponential_gaps,   // exponential inter-contact times binned into slots
};

// One simulated trial of a requester-helper pair at a fixed timer.
struct TrialOutcome {
  int event = 5;               // 1..5
  double cost = 0.0;           // realized completion + processing + comm cost
  double helper_energy = 0.0;  // energy drawn from the helper
  int bs_communications = 0;   // 0 or 2
};

// Simulates a single trial; used by the unit tests and the aggregate loop.
TrialOutcome simulate_trial(const ContactPair& pair, const TaskSpec& task,
                            const CompletionCost& completion, int timer,
                            std::mt19937_64& rng,
                            SamplingMethod method = SamplingMethod::slot_poisson);

// Aggregates over many trials.
struct SimulationSummary {
  long long trials = 0;
  double mean_cost = 0.0;
  double stderr_cost = 0.0;
  double mean_energy = 0.0;
  double stderr_energy = 0.0;
  std::array<double, 5> event_frequency{};
  std::array<double, 5> event_frequency_stderr{};
  // Per-event expected cost contribution E[cost * 1{event = i}], comparable
  // with the analytic per-event costs.
  std::array<double, 5> event_cost{};
  std::array<double, 5> event_cost_stderr{};
};

// Runs `trials` independent trials. Trials are split into fixed-size chunks,
// each with its own RNG substream derived from `seed`, and combined in chunk
// order with compensated summation, so results are identical for any thread
// count. `threads` <= 0 picks the hardware concurrency.
SimulationSummary simulate_pair(const ContactPair& pair, const TaskSpec& task,
                                const CompletionCost& completion, int timer,
                                long long trials, std::uint64_t seed,
                                SamplingMethod method = SamplingMethod::slot_poisson,
                                int threads = 0);

// Per-pair comparison of analytic and empirical cost/energy. The standard
// errors come from the analytic event model (a known-null test), which stays
// honest when a rare event dominates the variance but never shows up in the
// sample.
struct PairValidationRow {
  int requester = 0;
  int helper = 0;
  int timer = 0;
  double analytic_cost = 0.0;
  double empirical_cost = 0.0;
  double cost_stderr = 0.0;
  double cost_z = 0.0;
  double analytic_energy = 0.0;
  double empirical_energy = 0.0;
  double energy_stderr = 0.0;
  double energy_z = 0.0;
  bool pass = true;
};

struct ValidationReport {
  std::vector<PairValidationRow> rows;
  double total_analytic_cost = 0.0;   // assignment objective
  double total_empirical_cost = 0.0;  // empirical pair means + server terms
  long long trials_per_pair = 0;
  double z_threshold = 4.0;
  bool pass = true;

  std::string to_text() const;
};

// Simulates every helper-assigned requester of a feasible assignment at its
// recorded timer and flags pairs whose analytic cost or energy deviates
// beyond `z_threshold` standard errors.
ValidationReport validate_assignment(const Instance& instance,
                                     const Assignment& assignment,
                                     const PairTable& table, long long trials,
                                     std::uint64_t seed,
                                     double z_threshold = 4.0);

}  // namespace d2dto

#endif  // D2DTO_MONTECARLO_HPP_
