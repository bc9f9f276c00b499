#ifndef D2DTO_COST_MODEL_HPP_
#define D2DTO_COST_MODEL_HPP_

#include <array>
#include <vector>

#include "d2dto/contact_model.hpp"

namespace d2dto {

// Per-task energies, deadline and cost coefficients. `helper_proc_cost` is
// the processing cost on the helper currently under evaluation; callers that
// price helpers differently substitute the per-pair value before evaluating.
struct TaskSpec {
  double processing_energy = 0.0;  // e^p, Joules
  double bs_comm_energy = 0.0;     // e^c, Joules per BS communication
  int deadline = 1;                // slots, 1..horizon
  double helper_proc_cost = 0.0;   // processing on a helper
  double server_proc_cost = 0.0;   // processing on the remote server
  double bs_comm_cost = 0.0;       // one communication with the BS
  double server_comm_cost = 0.0;   // one communication with the server

  void validate() const;  // throws std::domain_error
};

// Completion-time cost f(t) for a result obtained t slots after the start.
// Default quadratic form alpha * t^2; a table form covers custom shapes and
// must be defined for every slot it is evaluated at (0..deadline).
class CompletionCost {
 public:
  CompletionCost() = default;

  static CompletionCost quadratic(double alpha);
  static CompletionCost table(std::vector<double> values);

  double operator()(int slot) const;

  bool is_quadratic() const { return values_.empty(); }
  double alpha() const { return alpha_; }
  const std::vector<double>& values() const { return values_; }

  bool operator==(const CompletionCost&) const = default;

 private:
  double alpha_ = 0.0;
  std::vector<double> values_;
};

// Probabilities or expected costs of the five pair outcomes:
//   [0] both task and result via D2D (two meetings before the timer)
//   [1] task via D2D before the timer, result via D2D after it
//   [2] task via BS at the timer, result via D2D
//   [3] task via D2D, result via BS at the timer
//   [4] no meeting at all: server fallback
using EventVector = std::array<double, 5>;

// Event probabilities at the given timer. Requires 0 <= timer <= deadline.
EventVector event_probabilities(const ContactPair& pair, const TaskSpec& task,
                                int timer);

// Expected cost contribution of each event (probability-weighted completion,
// processing and communication costs).
EventVector event_costs(const ContactPair& pair, const TaskSpec& task,
                        const CompletionCost& completion, int timer);

// Sum of the five event costs.
double total_expected_cost(const ContactPair& pair, const TaskSpec& task,
                           const CompletionCost& completion, int timer);

// Expected energy drawn from the helper at the given timer.
double expected_energy(const ContactPair& pair, const TaskSpec& task,
                       int timer);

// Cost of sending the task to the remote server instead of a helper.
double server_fallback_cost(const TaskSpec& task);

// Result of the timer scan for one requester-helper pair.
struct PairEvaluation {
  int timer = 0;                // t*, in 0..deadline
  double expected_cost = 0.0;   // cost at t*
  double expected_energy = 0.0; // helper energy at t*
  EventVector event_probs{};    // event probabilities at t*
};

// Minimizes the expected pair cost over timers 0..deadline. The scan shares
// prefix computations across timers, so one call costs O(deadline). Ties are
// broken toward the smallest timer.
PairEvaluation optimal_timer(const ContactPair& pair, const TaskSpec& task,
                             const CompletionCost& completion);

}  // namespace d2dto

#endif  // D2DTO_COST_MODEL_HPP_
