#include "d2dto/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "d2dto/errors.hpp"

namespace d2dto {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) {
    s += x * x;
  }
  return s;
}

}  // namespace

PairTable evaluate_all_pairs(const Instance& instance) {
  instance.validate();
  PairTable table;
  table.num_requesters = instance.num_requesters();
  table.num_helpers = instance.num_helpers();
  table.evals.reserve(static_cast<size_t>(table.num_requesters) *
                      static_cast<size_t>(table.num_helpers));
  table.server_cost.reserve(static_cast<size_t>(table.num_requesters));
  for (int r = 0; r < table.num_requesters; ++r) {
    for (int h = 0; h < table.num_helpers; ++h) {
      table.evals.push_back(optimal_timer(instance.pair(r, h),
                                          instance.task_for_pair(r, h),
                                          instance.completion_cost));
    }
    table.server_cost.push_back(
        server_fallback_cost(instance.tasks[static_cast<size_t>(r)]));
  }
  return table;
}

double assignment_objective(const PairTable& table, std::span<const int> choice) {
  double total = 0.0;
  for (int r = 0; r < table.num_requesters; ++r) {
    const int c = choice[static_cast<size_t>(r)];
    total += c == kServerChoice ? table.server_cost[static_cast<size_t>(r)]
                                : table.at(r, c).expected_cost;
  }
  return total;
}

std::vector<double> helper_loads(const PairTable& table, std::span<const int> choice) {
  std::vector<double> loads(static_cast<size_t>(table.num_helpers), 0.0);
  for (int r = 0; r < table.num_requesters; ++r) {
    const int c = choice[static_cast<size_t>(r)];
    if (c != kServerChoice) {
      loads[static_cast<size_t>(c)] += table.at(r, c).expected_energy;
    }
  }
  return loads;
}

bool assignment_feasible(const PairTable& table, std::span<const int> choice,
                         std::span<const double> helper_energy) {
  const std::vector<double> loads = helper_loads(table, choice);
  for (int h = 0; h < table.num_helpers; ++h) {
    if (loads[static_cast<size_t>(h)] >
        helper_energy[static_cast<size_t>(h)] + kEnergySlack) {
      return false;
    }
  }
  return true;
}

Assignment make_assignment(const PairTable& table, std::vector<int> choice,
                           std::span<const double> helper_energy) {
  if (static_cast<int>(choice.size()) != table.num_requesters) {
    throw std::invalid_argument("choice vector size must equal R");
  }
  for (int c : choice) {
    if (c != kServerChoice && (c < 0 || c >= table.num_helpers)) {
      throw std::invalid_argument("choice entries must be a helper index or server");
    }
  }
  Assignment a;
  a.choice = std::move(choice);
  a.objective = assignment_objective(table, a.choice);
  a.feasible = assignment_feasible(table, a.choice, helper_energy);
  return a;
}

void SolverParams::validate(int num_helpers) const {
  std::vector<std::string> problems;
  if (max_iterations < 1) {
    problems.push_back("max_iterations: must be >= 1");
  }
  if (!(subgradient_tolerance > 0.0)) {
    problems.push_back("subgradient_tolerance: must be > 0");
  }
  if (!(multiplier_tolerance > 0.0)) {
    problems.push_back("multiplier_tolerance: must be > 0");
  }
  if (!(step_scale > 0.0) || !(step_scale < 2.0)) {
    problems.push_back("step_scale: must lie in (0, 2)");
  }
  if (!initial_multipliers.empty()) {
    if (static_cast<int>(initial_multipliers.size()) != num_helpers) {
      problems.push_back("initial_multipliers: size must equal H");
    } else {
      for (double u : initial_multipliers) {
        if (!(u >= 0.0) || !std::isfinite(u)) {
          problems.push_back("initial_multipliers: entries must be finite and >= 0");
          break;
        }
      }
    }
  }
  if (!problems.empty()) {
    throw ValidationError(problems);
  }
}

RelaxationResult solve_relaxation(const PairTable& table,
                                  std::span<const double> helper_energy,
                                  std::span<const double> multipliers) {
  if (static_cast<int>(multipliers.size()) != table.num_helpers ||
      static_cast<int>(helper_energy.size()) != table.num_helpers) {
    throw std::invalid_argument("multipliers and energies must have H entries");
  }
  for (double u : multipliers) {
    if (!(u >= 0.0)) {
      throw std::domain_error("Lagrange multipliers must be >= 0");
    }
  }

  std::vector<int> choice(static_cast<size_t>(table.num_requesters), kServerChoice);
  double value = 0.0;
  for (int r = 0; r < table.num_requesters; ++r) {
    double best = table.server_cost[static_cast<size_t>(r)];
    int best_choice = kServerChoice;
    for (int h = 0; h < table.num_helpers; ++h) {
      const PairEvaluation& e = table.at(r, h);
      const double priced =
          e.expected_cost + multipliers[static_cast<size_t>(h)] * e.expected_energy;
      if (priced < best) {
        best = priced;
        best_choice = h;
      }
    }
    choice[static_cast<size_t>(r)] = best_choice;
    value += best;
  }
  for (int h = 0; h < table.num_helpers; ++h) {
    value -= multipliers[static_cast<size_t>(h)] * helper_energy[static_cast<size_t>(h)];
  }

  RelaxationResult result;
  result.dual_value = value;
  result.assignment = make_assignment(table, std::move(choice), helper_energy);
  return result;
}

std::vector<double> subgradient(const PairTable& table,
                                const Assignment& assignment,
                                std::span<const double> helper_energy) {
  std::vector<double> d = helper_loads(table, assignment.choice);
  for (int h = 0; h < table.num_helpers; ++h) {
    d[static_cast<size_t>(h)] -= helper_energy[static_cast<size_t>(h)];
  }
  return d;
}

double polyak_step(double upper_bound, double dual_value,
                   std::span<const double> direction, double step_scale) {
  if (!(step_scale > 0.0) || !(step_scale < 2.0)) {
    throw std::domain_error("step scale must lie in (0, 2)");
  }
  const double dd = squared_norm(direction);
  if (dd == 0.0) {
    throw std::invalid_argument("polyak_step called with a zero subgradient");
  }
  return std::max(0.0, step_scale * (upper_bound - dual_value) / dd);
}

Assignment repair(const Assignment& assignment, const PairTable& table,
                  std::span<const double> helper_energy) {
  std::vector<int> choice = assignment.choice;
  std::vector<double> loads = helper_loads(table, choice);

  while (true) {
    int worst = -1;
    double worst_violation = kEnergySlack;
    for (int h = 0; h < table.num_helpers; ++h) {
      const double violation =
          loads[static_cast<size_t>(h)] - helper_energy[static_cast<size_t>(h)];
      if (violation > worst_violation) {
        worst_violation = violation;
        worst = h;
      }
    }
    if (worst < 0) {
      break;
    }

    // Shed tasks from the worst helper until it fits, moving the task whose
    // cheapest alternative hurts the objective the least.
    while (loads[static_cast<size_t>(worst)] >
           helper_energy[static_cast<size_t>(worst)] + kEnergySlack) {
      int move_task = -1;
      int move_target = kServerChoice;
      double move_penalty = kInf;
      for (int r = 0; r < table.num_requesters; ++r) {
        if (choice[static_cast<size_t>(r)] != worst) {
          continue;
        }
        const double current = table.at(r, worst).expected_cost;
        double alt_cost = table.server_cost[static_cast<size_t>(r)];
        int alt = kServerChoice;
        for (int h = 0; h < table.num_helpers; ++h) {
          if (h == worst) {
            continue;
          }
          const PairEvaluation& e = table.at(r, h);
          if (loads[static_cast<size_t>(h)] + e.expected_energy >
              helper_energy[static_cast<size_t>(h)] + kEnergySlack) {
            continue;
          }
          if (e.expected_cost < alt_cost) {
            alt_cost = e.expected_cost;
            alt = h;
          }
        }
        const double penalty = alt_cost - current;
        if (penalty < move_penalty) {
          move_penalty = penalty;
          move_task = r;
          move_target = alt;
        }
      }
      // The server always accepts, so a move always exists.
      loads[static_cast<size_t>(worst)] -=
          table.at(move_task, worst).expected_energy;
      if (move_target != kServerChoice) {
        loads[static_cast<size_t>(move_target)] +=
            table.at(move_task, move_target).expected_energy;
      }
      choice[static_cast<size_t>(move_task)] = move_target;
    }
  }

  return make_assignment(table, std::move(choice), helper_energy);
}

DualState lagrangian_solve(const Instance& instance, const PairTable& table,
                           const SolverParams& params) {
  params.validate(table.num_helpers);
  const std::span<const double> energy(instance.helper_energy);

  DualState state;
  state.multipliers = params.initial_multipliers.empty()
                          ? std::vector<double>(static_cast<size_t>(table.num_helpers), 0.0)
                          : params.initial_multipliers;

  // All-server assignment: always feasible, provides the initial upper bound.
  state.incumbent = make_assignment(
      table, std::vector<int>(static_cast<size_t>(table.num_requesters), kServerChoice),
      energy);
  state.lower_bound = -kInf;
  state.upper_bound = state.incumbent.objective;

  for (int k = 1; k <= params.max_iterations; ++k) {
    state.iterations = k;
    const RelaxationResult rel =
        solve_relaxation(table, energy, state.multipliers);
    if (rel.dual_value > state.lower_bound) {
      state.lower_bound = rel.dual_value;
    }

    const Assignment repaired = repair(rel.assignment, table, energy);
    if (repaired.objective < state.upper_bound) {
      state.upper_bound = repaired.objective;
      state.incumbent = repaired;
    }

    state.last_subgradient = subgradient(table, rel.assignment, energy);
    const double norm = std::sqrt(squared_norm(state.last_subgradient));
    if (norm <= params.subgradient_tolerance) {
      state.trace.push_back({k, rel.dual_value, state.lower_bound,
                             state.upper_bound, 0.0, norm});
      break;
    }

    const double step = polyak_step(state.upper_bound, rel.dual_value,
                                    state.last_subgradient, params.step_scale);
    state.trace.push_back(
        {k, rel.dual_value, state.lower_bound, state.upper_bound, step, norm});

    double delta_sq = 0.0;
    for (int h = 0; h < table.num_helpers; ++h) {
      const double next =
          std::max(0.0, state.multipliers[static_cast<size_t>(h)] +
                            step * state.last_subgradient[static_cast<size_t>(h)]);
      const double delta = next - state.multipliers[static_cast<size_t>(h)];
      delta_sq += delta * delta;
      state.multipliers[static_cast<size_t>(h)] = next;
    }
    if (std::sqrt(delta_sq) <= params.multiplier_tolerance) {
      break;
    }
  }

  return state;
}

DualState lagrangian_solve(const Instance& instance, const SolverParams& params) {
  return lagrangian_solve(instance, evaluate_all_pairs(instance), params);
}

namespace {

// Shared greedy skeleton for the two baselines: tasks in descending key
// order, each placed on the preferred fitting helper when that beats the
// server, updating residual energy after every placement.
template <typename KeyFn, typename PreferFn>
Assignment greedy_baseline(const Instance& instance, const PairTable& table,
                           KeyFn task_key, PreferFn prefer) {
  std::vector<int> order(static_cast<size_t>(table.num_requesters));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> keys(order.size());
  for (int r = 0; r < table.num_requesters; ++r) {
    keys[static_cast<size_t>(r)] = task_key(r);
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (keys[static_cast<size_t>(a)] != keys[static_cast<size_t>(b)]) {
      return keys[static_cast<size_t>(a)] > keys[static_cast<size_t>(b)];
    }
    return a < b;
  });

  std::vector<double> residual(instance.helper_energy);
  std::vector<int> choice(static_cast<size_t>(table.num_requesters), kServerChoice);
  for (int r : order) {
    int best = -1;
    for (int h = 0; h < table.num_helpers; ++h) {
      const PairEvaluation& e = table.at(r, h);
      if (e.expected_energy > residual[static_cast<size_t>(h)] + kEnergySlack) {
        continue;  // not enough residual energy
      }
      if (e.expected_cost >= table.server_cost[static_cast<size_t>(r)]) {
        continue;  // the server is at least as cheap
      }
      if (best < 0 || prefer(r, h, best)) {
        best = h;
      }
    }
    if (best >= 0) {
      choice[static_cast<size_t>(r)] = best;
      residual[static_cast<size_t>(best)] -= table.at(r, best).expected_energy;
    }
  }
  return make_assignment(table, std::move(choice), instance.helper_energy);
}

}  // namespace

Assignment cost_based_baseline(const Instance& instance, const PairTable& table,
                               BaselineOrdering ordering) {
  auto key = [&](int r) {
    if (table.num_helpers == 0) {
      return table.server_cost[static_cast<size_t>(r)];
    }
    double best = kInf;
    double sum = 0.0;
    for (int h = 0; h < table.num_helpers; ++h) {
      best = std::min(best, table.at(r, h).expected_cost);
      sum += table.at(r, h).expected_cost;
    }
    return ordering == BaselineOrdering::best_over_helpers
               ? best
               : sum / table.num_helpers;
  };
  auto prefer = [&](int r, int h, int incumbent) {
    return table.at(r, h).expected_cost < table.at(r, incumbent).expected_cost;
  };
  return greedy_baseline(instance, table, key, prefer);
}

Assignment contact_based_baseline(const Instance& instance, const PairTable& table,
                                  BaselineOrdering ordering) {
  auto key = [&](int r) {
    if (table.num_helpers == 0) {
      return 0.0;
    }
    double best = 0.0;
    double sum = 0.0;
    for (int h = 0; h < table.num_helpers; ++h) {
      best = std::max(best, instance.contact_rates.at(r, h));
      sum += instance.contact_rates.at(r, h);
    }
    return ordering == BaselineOrdering::best_over_helpers
               ? best
               : sum / table.num_helpers;
  };
  auto prefer = [&](int r, int h, int incumbent) {
    return instance.contact_rates.at(r, h) >
           instance.contact_rates.at(r, incumbent);
  };
  return greedy_baseline(instance, table, key, prefer);
}

Assignment exact_solve(const Instance& instance, const PairTable& table) {
  const int r_count = table.num_requesters;
  const int h_count = table.num_helpers;
  const double bits = r_count * std::log2(static_cast<double>(h_count) + 1.0);
  if (bits > 30.0) {
    throw SizeError("exact enumeration rejected: R*log2(H+1) = " +
                    std::to_string(bits) + " exceeds 30");
  }

  // Digit 0 encodes the server so the first combination enumerated is the
  // all-server assignment; ties keep the earliest combination.
  std::vector<int> digits(static_cast<size_t>(r_count), 0);
  std::vector<int> choice(static_cast<size_t>(r_count), kServerChoice);
  std::vector<int> best_choice = choice;
  double best_objective = assignment_objective(table, choice);

  while (true) {
    int pos = 0;
    for (; pos < r_count; ++pos) {
      if (digits[static_cast<size_t>(pos)] < h_count) {
        ++digits[static_cast<size_t>(pos)];
        break;
      }
      digits[static_cast<size_t>(pos)] = 0;
    }
    if (pos == r_count) {
      break;
    }
    for (int r = 0; r < r_count; ++r) {
      choice[static_cast<size_t>(r)] = digits[static_cast<size_t>(r)] - 1;
    }
    if (!assignment_feasible(table, choice, instance.helper_energy)) {
      continue;
    }
    const double objective = assignment_objective(table, choice);
    if (objective < best_objective) {
      best_objective = objective;
      best_choice = choice;
    }
  }

  return make_assignment(table, std::move(best_choice), instance.helper_energy);
}

namespace {

using ojson = nlohmann::ordered_json;

constexpr const char* kSolutionSchema = "d2dto.solution.v1";

}  // namespace

std::string solution_to_json(const std::string& solver_name,
                             const PairTable& table, const Assignment& assignment,
                             const DualState* dual) {
  ojson j;
  j["schema"] = kSolutionSchema;
  j["solver"] = solver_name;
  j["objective"] = assignment.objective;
  j["feasible"] = assignment.feasible;
  if (dual != nullptr) {
    j["lower_bound"] = dual->lower_bound;
    j["upper_bound"] = dual->upper_bound;
    j["iterations"] = dual->iterations;
  }
  ojson rows = ojson::array();
  for (int r = 0; r < table.num_requesters; ++r) {
    const int c = assignment.choice[static_cast<size_t>(r)];
    ojson row;
    row["requester"] = r;
    if (c == kServerChoice) {
      row["choice"] = "server";
      row["expected_cost"] = table.server_cost[static_cast<size_t>(r)];
    } else {
      const PairEvaluation& e = table.at(r, c);
      row["choice"] = c;
      row["timer"] = e.timer;
      row["expected_cost"] = e.expected_cost;
      row["expected_energy"] = e.expected_energy;
    }
    rows.push_back(std::move(row));
  }
  j["assignment"] = std::move(rows);
  if (dual != nullptr) {
    ojson trace = ojson::array();
    for (const TraceRow& t : dual->trace) {
      ojson row;
      row["iteration"] = t.iteration;
      row["dual_value"] = t.dual_value;
      row["lower_bound"] = t.lower_bound;
      row["upper_bound"] = t.upper_bound;
      row["step"] = t.step;
      row["subgradient_norm"] = t.subgradient_norm;
      trace.push_back(std::move(row));
    }
    j["trace"] = std::move(trace);
  }
  return j.dump(2) + "\n";
}

void save_solution(const std::string& solver_name, const PairTable& table,
                   const Assignment& assignment, const DualState* dual,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ParseError("cannot open '" + path.string() + "' for writing");
  }
  out << solution_to_json(solver_name, table, assignment, dual);
  if (!out) {
    throw ParseError("failed writing solution to '" + path.string() + "'");
  }
}

SolutionFile solution_from_json(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("solution parse error: ") + e.what());
  }
  if (!j.is_object() || !j.contains("schema") ||
      j.at("schema").get<std::string>() != kSolutionSchema) {
    throw ParseError("not a d2dto solution document");
  }
  SolutionFile s;
  s.solver = j.at("solver").get<std::string>();
  s.objective = j.at("objective").get<double>();
  s.feasible = j.at("feasible").get<bool>();
  if (j.contains("lower_bound")) {
    s.lower_bound = j.at("lower_bound").get<double>();
  }
  if (j.contains("upper_bound")) {
    s.upper_bound = j.at("upper_bound").get<double>();
  }
  for (const auto& row : j.at("assignment")) {
    const auto& c = row.at("choice");
    s.choice.push_back(c.is_string() ? kServerChoice : c.get<int>());
  }
  return s;
}

SolutionFile load_solution(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open '" + path.string() + "' for reading");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return solution_from_json(buffer.str());
}

}  // namespace d2dto
