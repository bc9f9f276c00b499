#include "d2dto/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace d2dto {

namespace {

void check_timer(const TaskSpec& task, int timer) {
  if (timer < 0 || timer > task.deadline) {
    throw std::domain_error("timer " + std::to_string(timer) +
                            " outside 0.." + std::to_string(task.deadline));
  }
}

struct PairProbabilities {
  EventVector pi{};
  double before_eq0 = 0.0;  // P(no meeting before the timer)
  double before_eq1 = 0.0;  // P(exactly one meeting before the timer)
};

// Table of event probabilities at one timer value. Every probability is a
// product of prefix/suffix window terms, each O(1) to evaluate.
PairProbabilities probabilities_at(const ContactPair& pair,
                                   const TaskSpec& task, int timer) {
  const int d = task.deadline;
  PairProbabilities p;
  p.before_eq0 = prob_exactly(pair, 1, timer, 0);
  p.before_eq1 = prob_exactly(pair, 1, timer, 1);
  const double after_ge1 = prob_at_least(pair, timer + 1, d, 1);
  const double after_eq0 = prob_exactly(pair, timer + 1, d, 0);
  p.pi[0] = prob_at_least(pair, 1, timer, 2);
  p.pi[1] = p.before_eq1 * after_ge1;
  p.pi[2] = p.before_eq0 * after_ge1;
  p.pi[3] = p.before_eq1 * after_eq0;
  p.pi[4] = std::clamp(1.0 - p.pi[0] - p.pi[1] - p.pi[2] - p.pi[3], 0.0, 1.0);
  return p;
}

double energy_from(const EventVector& pi, const TaskSpec& task) {
  return (pi[0] + pi[1]) * task.processing_energy +
         (pi[2] + pi[3]) * (task.processing_energy + task.bs_comm_energy);
}

// Shared prefix state for evaluating pair costs at every timer in
// 0..deadline. Construction is O(deadline); each timer evaluation is O(1),
// which keeps the full scan linear in the deadline.
class TimerScan {
 public:
  TimerScan(const ContactPair& pair, const TaskSpec& task,
            const CompletionCost& completion)
      : pair_(pair), task_(task) {
    const int d = task.deadline;
    f_.resize(d + 1);
    for (int k = 0; k <= d; ++k) {
      f_[k] = completion(k);
    }

    // Prefix sum of f(k) * P(second meeting lands in slot k).
    completion_before_.resize(d + 1);
    double prev_ge2 = 0.0;  // empty range
    double acc = 0.0;
    for (int k = 0; k <= d; ++k) {
      const double ge2 = prob_at_least(pair, 1, k, 2);
      acc += f_[k] * (ge2 - prev_ge2);
      completion_before_[k] = acc;
      prev_ge2 = ge2;
    }

    // Suffix recurrence for sum_{k=t+1..d} f(k) q^{k-t-1} with q the
    // single-slot miss probability; multiplied by the single-slot hit
    // probability it yields the expected f at the first post-timer meeting.
    slot_miss_ = prob_exactly(pair, 1, 1, 0);
    slot_hit_ = prob_at_least(pair, 1, 1, 1);
    first_meeting_weight_.assign(d + 1, 0.0);
    for (int t = d - 1; t >= 0; --t) {
      first_meeting_weight_[t] = f_[t + 1] + slot_miss_ * first_meeting_weight_[t + 1];
    }
  }

  EventVector costs(int timer) const {
    const PairProbabilities p = probabilities_at(pair_, task_, timer);
    const double after_f = slot_hit_ * first_meeting_weight_[timer];
    EventVector delta;
    delta[0] = completion_before_[timer] + p.pi[0] * task_.helper_proc_cost;
    delta[1] = p.before_eq1 * after_f + p.pi[1] * task_.helper_proc_cost;
    delta[2] = p.before_eq0 * after_f +
               p.pi[2] * (task_.helper_proc_cost + 2.0 * task_.bs_comm_cost);
    delta[3] = p.pi[3] * (f_[timer] + task_.helper_proc_cost +
                          2.0 * task_.bs_comm_cost);
    delta[4] = p.pi[4] * (task_.server_proc_cost + 2.0 * task_.server_comm_cost);
    return delta;
  }

  double total(int timer) const {
    const EventVector delta = costs(timer);
    return delta[0] + delta[1] + delta[2] + delta[3] + delta[4];
  }

 private:
  ContactPair pair_;
  TaskSpec task_;
  std::vector<double> f_;
  std::vector<double> completion_before_;
  std::vector<double> first_meeting_weight_;
  double slot_miss_ = 1.0;
  double slot_hit_ = 0.0;
};

}  // namespace

void TaskSpec::validate() const {
  auto bad = [](double v) { return !(v >= 0.0) || !std::isfinite(v); };
  if (bad(processing_energy) || bad(bs_comm_energy)) {
    throw std::domain_error("task energies must be finite and >= 0");
  }
  if (bad(helper_proc_cost) || bad(server_proc_cost) || bad(bs_comm_cost) ||
      bad(server_comm_cost)) {
    throw std::domain_error("task costs must be finite and >= 0");
  }
  if (deadline < 1) {
    throw std::domain_error("task deadline must be >= 1, got " +
                            std::to_string(deadline));
  }
}

CompletionCost CompletionCost::quadratic(double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw std::domain_error("completion cost weight must be finite and >= 0");
  }
  CompletionCost f;
  f.alpha_ = alpha;
  return f;
}

CompletionCost CompletionCost::table(std::vector<double> values) {
  if (values.empty()) {
    throw std::domain_error("completion cost table must not be empty");
  }
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::domain_error("completion cost table values must be finite and >= 0");
    }
  }
  CompletionCost f;
  f.values_ = std::move(values);
  return f;
}

double CompletionCost::operator()(int slot) const {
  if (slot < 0) {
    throw std::domain_error("completion cost evaluated at negative slot");
  }
  if (values_.empty()) {
    const double t = static_cast<double>(slot);
    return alpha_ * t * t;
  }
  if (static_cast<size_t>(slot) >= values_.size()) {
    throw std::domain_error("completion cost table has no value for slot " +
                            std::to_string(slot));
  }
  return values_[static_cast<size_t>(slot)];
}

EventVector event_probabilities(const ContactPair& pair, const TaskSpec& task,
                                int timer) {
  pair.validate();
  task.validate();
  check_timer(task, timer);
  return probabilities_at(pair, task, timer).pi;
}

EventVector event_costs(const ContactPair& pair, const TaskSpec& task,
                        const CompletionCost& completion, int timer) {
  pair.validate();
  task.validate();
  check_timer(task, timer);
  return TimerScan(pair, task, completion).costs(timer);
}

double total_expected_cost(const ContactPair& pair, const TaskSpec& task,
                           const CompletionCost& completion, int timer) {
  pair.validate();
  task.validate();
  check_timer(task, timer);
  return TimerScan(pair, task, completion).total(timer);
}

double expected_energy(const ContactPair& pair, const TaskSpec& task,
                       int timer) {
  pair.validate();
  task.validate();
  check_timer(task, timer);
  return energy_from(probabilities_at(pair, task, timer).pi, task);
}

double server_fallback_cost(const TaskSpec& task) {
  return task.server_proc_cost + 2.0 * task.server_comm_cost;
}

PairEvaluation optimal_timer(const ContactPair& pair, const TaskSpec& task,
                             const CompletionCost& completion) {
  pair.validate();
  task.validate();
  const TimerScan scan(pair, task, completion);
  int best_timer = 0;
  double best_cost = scan.total(0);
  for (int t = 1; t <= task.deadline; ++t) {
    const double cost = scan.total(t);
    if (cost < best_cost) {
      best_cost = cost;
      best_timer = t;
    }
  }
  PairEvaluation eval;
  eval.timer = best_timer;
  eval.expected_cost = best_cost;
  eval.event_probs = probabilities_at(pair, task, best_timer).pi;
  eval.expected_energy = energy_from(eval.event_probs, task);
  return eval;
}

}  // namespace d2dto
