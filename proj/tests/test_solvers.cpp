#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <vector>

#include <doctest.h>

#include "d2dto/errors.hpp"
#include "d2dto/harness.hpp"
#include "d2dto/instance.hpp"
#include "d2dto/solvers.hpp"
#include "oracles.hpp"

using namespace d2dto;

namespace {

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

GeneratorConfig small_config(std::uint64_t seed, int r = 5, int h = 2) {
  GeneratorConfig cfg;
  cfg.num_requesters = r;
  cfg.num_helpers = h;
  cfg.seed = seed;
  return cfg;
}

// Hand-built instance: explicit rates, uniform task template.
Instance make_instance(const std::vector<std::vector<double>>& rates,
                       const std::vector<double>& energies, int deadline,
                       double alpha) {
  Instance inst;
  inst.horizon = deadline;
  inst.slot_duration = 1.0;
  inst.completion_cost = CompletionCost::quadratic(alpha);
  inst.helper_energy = energies;
  const int r_count = static_cast<int>(rates.size());
  const int h_count = static_cast<int>(energies.size());
  inst.contact_rates = Matrix(r_count, h_count);
  for (int r = 0; r < r_count; ++r) {
    for (int h = 0; h < h_count; ++h) {
      inst.contact_rates.at(r, h) = rates[static_cast<size_t>(r)][static_cast<size_t>(h)];
    }
  }
  for (int r = 0; r < r_count; ++r) {
    TaskSpec task;
    task.processing_energy = 2.0;
    task.bs_comm_energy = 0.5;
    task.deadline = deadline;
    task.helper_proc_cost = 2.0;
    task.server_proc_cost = 20.0;
    task.bs_comm_cost = 5.0;
    task.server_comm_cost = 50.0;
    inst.tasks.push_back(task);
  }
  return inst;
}

// Independent scripted greedy used as the baseline oracle: literal
// transcription of the strategy description.
Assignment scripted_greedy(const Instance& inst, const PairTable& table,
                           bool order_by_cost) {
  const int r_count = table.num_requesters;
  const int h_count = table.num_helpers;
  std::vector<int> order(static_cast<size_t>(r_count));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> key(static_cast<size_t>(r_count), 0.0);
  for (int r = 0; r < r_count; ++r) {
    if (order_by_cost) {
      double best = table.server_cost[static_cast<size_t>(r)];
      if (h_count > 0) {
        best = table.at(r, 0).expected_cost;
        for (int h = 1; h < h_count; ++h) {
          best = std::min(best, table.at(r, h).expected_cost);
        }
      }
      key[static_cast<size_t>(r)] = best;
    } else {
      double best = 0.0;
      for (int h = 0; h < h_count; ++h) {
        best = std::max(best, inst.contact_rates.at(r, h));
      }
      key[static_cast<size_t>(r)] = best;
    }
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return key[static_cast<size_t>(a)] > key[static_cast<size_t>(b)];
  });

  std::vector<double> residual = inst.helper_energy;
  std::vector<int> choice(static_cast<size_t>(r_count), kServerChoice);
  for (int r : order) {
    int pick = -1;
    for (int h = 0; h < h_count; ++h) {
      if (table.at(r, h).expected_energy > residual[static_cast<size_t>(h)] + kEnergySlack) continue;
      if (table.at(r, h).expected_cost >= table.server_cost[static_cast<size_t>(r)]) continue;
      if (pick < 0) {
        pick = h;
      } else if (order_by_cost) {
        if (table.at(r, h).expected_cost < table.at(r, pick).expected_cost) pick = h;
      } else {
        if (inst.contact_rates.at(r, h) > inst.contact_rates.at(r, pick)) pick = h;
      }
    }
    if (pick >= 0) {
      choice[static_cast<size_t>(r)] = pick;
      residual[static_cast<size_t>(pick)] -= table.at(r, pick).expected_energy;
    }
  }
  return make_assignment(table, choice, inst.helper_energy);
}

}  // namespace

TEST_SUITE("solvers") {

TEST_CASE("pair table with zero rates degenerates to server costs") {
  const Instance inst = make_instance({{0.0, 0.0}, {0.0, 0.0}}, {10.0, 10.0}, 4, 0.004);
  const PairTable table = evaluate_all_pairs(inst);
  for (int r = 0; r < 2; ++r) {
    for (int h = 0; h < 2; ++h) {
      CHECK(table.at(r, h).expected_cost == table.server_cost[static_cast<size_t>(r)]);
      CHECK(table.at(r, h).expected_energy == 0.0);
    }
  }
}

TEST_CASE("pair table delegates to the timer scan") {
  const Instance inst = make_instance({{0.5}}, {10.0}, 4, 0.004);
  const PairTable table = evaluate_all_pairs(inst);
  const PairEvaluation direct = optimal_timer(inst.pair(0, 0),
                                              inst.task_for_pair(0, 0),
                                              inst.completion_cost);
  CHECK(table.at(0, 0).timer == direct.timer);
  CHECK(table.at(0, 0).expected_cost == direct.expected_cost);
  CHECK(table.at(0, 0).expected_energy == direct.expected_energy);
  CHECK(table.server_cost[0] ==
        server_fallback_cost(inst.tasks[0]));
}

TEST_CASE("relaxation at zero multipliers takes unconstrained minima") {
  const Instance inst = generate(small_config(501));
  const PairTable table = evaluate_all_pairs(inst);
  const std::vector<double> u(static_cast<size_t>(table.num_helpers), 0.0);
  const RelaxationResult rel = solve_relaxation(table, inst.helper_energy, u);
  for (int r = 0; r < table.num_requesters; ++r) {
    double best = table.server_cost[static_cast<size_t>(r)];
    for (int h = 0; h < table.num_helpers; ++h) {
      best = std::min(best, table.at(r, h).expected_cost);
    }
    const int c = rel.assignment.choice[static_cast<size_t>(r)];
    const double chosen = c == kServerChoice
                              ? table.server_cost[static_cast<size_t>(r)]
                              : table.at(r, c).expected_cost;
    CHECK(chosen == best);
  }
  const Assignment opt = exact_solve(inst, table);
  CHECK(rel.dual_value <= opt.objective + 1e-9);
}

TEST_CASE("huge multipliers push everything to the server") {
  const Instance inst = generate(small_config(502));
  const PairTable table = evaluate_all_pairs(inst);
  std::vector<double> u(static_cast<size_t>(table.num_helpers), 1e12);
  const RelaxationResult rel = solve_relaxation(table, inst.helper_energy, u);
  double expected = 0.0;
  for (int r = 0; r < table.num_requesters; ++r) {
    CHECK(rel.assignment.choice[static_cast<size_t>(r)] == kServerChoice);
    expected += table.server_cost[static_cast<size_t>(r)];
  }
  for (int h = 0; h < table.num_helpers; ++h) {
    expected -= u[static_cast<size_t>(h)] * inst.helper_energy[static_cast<size_t>(h)];
  }
  CHECK(near(rel.dual_value, expected, 1e-6));
}

TEST_CASE("weak duality holds for random multipliers") {
  std::mt19937 rng(503);
  const Instance inst = generate(small_config(503, 5, 2));
  const PairTable table = evaluate_all_pairs(inst);
  const Assignment opt = exact_solve(inst, table);
  std::uniform_real_distribution<double> mag(0.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> u(static_cast<size_t>(table.num_helpers));
    for (auto& x : u) {
      x = mag(rng);
    }
    const RelaxationResult rel = solve_relaxation(table, inst.helper_energy, u);
    CHECK(rel.dual_value <= opt.objective + 1e-9);
  }
}

TEST_CASE("relaxation rejects negative multipliers") {
  const Instance inst = generate(small_config(504));
  const PairTable table = evaluate_all_pairs(inst);
  std::vector<double> u(static_cast<size_t>(table.num_helpers), 0.0);
  u[0] = -0.25;
  CHECK_THROWS_AS((void)solve_relaxation(table, inst.helper_energy, u),
                  std::domain_error);
}

TEST_CASE("subgradient components") {
  const Instance inst = make_instance({{3.0, 0.0}, {3.0, 0.0}}, {5.0, 7.0}, 4, 0.004);
  const PairTable table = evaluate_all_pairs(inst);

  // Nothing assigned: d_h = -E_h.
  Assignment all_server = make_assignment(
      table, std::vector<int>{kServerChoice, kServerChoice}, inst.helper_energy);
  std::vector<double> d = subgradient(table, all_server, inst.helper_energy);
  CHECK(d[0] == -5.0);
  CHECK(d[1] == -7.0);

  // Hand-summed loads for a mixed assignment.
  Assignment mixed = make_assignment(table, std::vector<int>{0, 0}, inst.helper_energy);
  d = subgradient(table, mixed, inst.helper_energy);
  const double load = table.at(0, 0).expected_energy + table.at(1, 0).expected_energy;
  CHECK(near(d[0], load - 5.0, 1e-12));
  CHECK(d[1] == -7.0);
}

TEST_CASE("polyak step formula") {
  const std::vector<double> d = {2.0, 0.0};
  CHECK(polyak_step(10.0, 10.0, d, 1.0) == 0.0);       // closed gap
  CHECK(polyak_step(12.0, 10.0, d, 1.0) == 0.5);       // eta (ub-L)/||d||^2
  CHECK(polyak_step(10.0, 12.0, d, 1.0) == 0.0);       // dual above incumbent
  CHECK(polyak_step(12.0, 10.0, d, 1.5) == 0.75);
  CHECK_THROWS_AS((void)polyak_step(12.0, 10.0, std::vector<double>{0.0, 0.0}, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)polyak_step(12.0, 10.0, d, 2.0), std::domain_error);
}

TEST_CASE("repair leaves feasible assignments untouched") {
  const Instance inst = generate(small_config(505));
  const PairTable table = evaluate_all_pairs(inst);
  const Assignment all_server = make_assignment(
      table, std::vector<int>(static_cast<size_t>(table.num_requesters), kServerChoice),
      inst.helper_energy);
  const Assignment repaired = repair(all_server, table, inst.helper_energy);
  CHECK(repaired.choice == all_server.choice);
  CHECK(repaired.objective == all_server.objective);
}

TEST_CASE("repair moves the overload to the cheaper alternative") {
  // Both tasks start on helper 0, which only fits one of them; helper 1 has
  // slack. The moved task must take the cheaper of helper 1 and the server.
  const Instance inst = make_instance({{3.0, 1.0}, {3.0, 1.0}}, {2.2, 100.0}, 6, 0.004);
  const PairTable table = evaluate_all_pairs(inst);
  REQUIRE(table.at(0, 0).expected_energy > 1.0);  // two do not fit in 2.2

  const Assignment overloaded = make_assignment(table, std::vector<int>{0, 0},
                                                inst.helper_energy);
  REQUIRE_FALSE(overloaded.feasible);
  const Assignment repaired = repair(overloaded, table, inst.helper_energy);
  CHECK(repaired.feasible);

  // Exactly one task moved, to its cheapest alternative.
  const int moved = repaired.choice[0] == 0 ? 1 : 0;
  CHECK(repaired.choice[moved == 0 ? 1 : 0] == 0);
  const double alt_helper = table.at(moved, 1).expected_cost;
  const double alt_server = table.server_cost[static_cast<size_t>(moved)];
  const int expected_target = alt_helper < alt_server ? 1 : kServerChoice;
  CHECK(repaired.choice[static_cast<size_t>(moved)] == expected_target);

  // And it is the smaller-penalty task that moved.
  const double penalty0 = std::min(table.at(0, 1).expected_cost, table.server_cost[0]) -
                          table.at(0, 0).expected_cost;
  const double penalty1 = std::min(table.at(1, 1).expected_cost, table.server_cost[1]) -
                          table.at(1, 0).expected_cost;
  CHECK(moved == (penalty0 <= penalty1 ? 0 : 1));
}

TEST_CASE("repair sends everything to the server when budgets are zero") {
  const Instance inst = make_instance({{2.0, 2.0}, {2.0, 2.0}, {2.0, 2.0}},
                                      {0.0, 0.0}, 5, 0.004);
  const PairTable table = evaluate_all_pairs(inst);
  const Assignment bad = make_assignment(table, std::vector<int>{0, 0, 1},
                                         inst.helper_energy);
  const Assignment repaired = repair(bad, table, inst.helper_energy);
  double server_total = 0.0;
  for (int r = 0; r < 3; ++r) {
    CHECK(repaired.choice[static_cast<size_t>(r)] == kServerChoice);
    server_total += table.server_cost[static_cast<size_t>(r)];
  }
  CHECK(repaired.objective == server_total);
}

TEST_CASE("lagrangian with no helpers settles immediately") {
  GeneratorConfig cfg = small_config(506, 4, 0);
  const Instance inst = generate(cfg);
  const PairTable table = evaluate_all_pairs(inst);
  const DualState state = lagrangian_solve(inst, table);
  CHECK(state.iterations == 1);
  double server_total = 0.0;
  for (int r = 0; r < table.num_requesters; ++r) {
    CHECK(state.incumbent.choice[static_cast<size_t>(r)] == kServerChoice);
    server_total += table.server_cost[static_cast<size_t>(r)];
  }
  CHECK(state.lower_bound == server_total);
  CHECK(state.upper_bound == server_total);
}

TEST_CASE("slack budgets close the duality gap at zero multipliers") {
  GeneratorConfig cfg = small_config(507, 6, 2);
  cfg.helper_energy_min_j = 1.0e7;
  cfg.helper_energy_max_j = 2.0e7;
  const Instance inst = generate(cfg);
  const PairTable table = evaluate_all_pairs(inst);
  const DualState state = lagrangian_solve(inst, table);
  CHECK(state.lower_bound == state.upper_bound);
  for (int r = 0; r < table.num_requesters; ++r) {
    double best = table.server_cost[static_cast<size_t>(r)];
    for (int h = 0; h < table.num_helpers; ++h) {
      best = std::min(best, table.at(r, h).expected_cost);
    }
    const int c = state.incumbent.choice[static_cast<size_t>(r)];
    const double chosen = c == kServerChoice
                              ? table.server_cost[static_cast<size_t>(r)]
                              : table.at(r, c).expected_cost;
    CHECK(chosen == best);
  }
}

TEST_CASE("bounds sandwich the exact optimum on random instances") {
  for (int trial = 0; trial < 20; ++trial) {
    GeneratorConfig cfg = small_config(600 + static_cast<std::uint64_t>(trial),
                                       4 + trial % 4, 1 + trial % 3);
    const Instance inst = generate(cfg);
    const PairTable table = evaluate_all_pairs(inst);
    const Assignment opt = exact_solve(inst, table);
    const DualState state = lagrangian_solve(inst, table);

    const double slack = 1e-9 * std::max(1.0, std::abs(opt.objective));
    CHECK(state.lower_bound <= opt.objective + slack);
    CHECK(opt.objective <= state.incumbent.objective + slack);
    CHECK(state.upper_bound == state.incumbent.objective);
    CHECK(state.incumbent.feasible);

    // Monotone bound evolution along the trace.
    for (size_t i = 1; i < state.trace.size(); ++i) {
      CHECK(state.trace[i].lower_bound >= state.trace[i - 1].lower_bound);
      CHECK(state.trace[i].upper_bound <= state.trace[i - 1].upper_bound);
      CHECK(state.trace[i].lower_bound <= state.trace[i].upper_bound + slack);
    }
    for (double u : state.multipliers) {
      CHECK(u >= 0.0);
    }

    // Reported objective is reproducible from the pair table.
    CHECK(near(state.incumbent.objective,
               assignment_objective(table, state.incumbent.choice), 1e-9));
  }
}

TEST_CASE("lagrangian solve is deterministic") {
  const Instance inst = generate(small_config(508, 6, 3));
  const PairTable table = evaluate_all_pairs(inst);
  const DualState a = lagrangian_solve(inst, table);
  const DualState b = lagrangian_solve(inst, table);
  CHECK(a.incumbent.choice == b.incumbent.choice);
  CHECK(a.incumbent.objective == b.incumbent.objective);
  CHECK(a.lower_bound == b.lower_bound);
  CHECK(a.iterations == b.iterations);
  REQUIRE(a.trace.size() == b.trace.size());
  for (size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].dual_value == b.trace[i].dual_value);
    CHECK(a.trace[i].step == b.trace[i].step);
  }
}

TEST_CASE("solver params are validated") {
  const Instance inst = generate(small_config(509));
  const PairTable table = evaluate_all_pairs(inst);
  SolverParams params;
  params.step_scale = 2.5;
  CHECK_THROWS_AS((void)lagrangian_solve(inst, table, params), ValidationError);
  params = {};
  params.max_iterations = 0;
  CHECK_THROWS_AS((void)lagrangian_solve(inst, table, params), ValidationError);
  params = {};
  params.initial_multipliers = {1.0};  // wrong size for H=2
  CHECK_THROWS_AS((void)lagrangian_solve(inst, table, params), ValidationError);
}

TEST_CASE("baselines match an independent scripted greedy") {
  for (int trial = 0; trial < 50; ++trial) {
    const Instance inst = generate(small_config(700 + static_cast<std::uint64_t>(trial),
                                                4 + trial % 5, 1 + trial % 3));
    const PairTable table = evaluate_all_pairs(inst);
    const Assignment cost_lib = cost_based_baseline(inst, table);
    const Assignment cost_ref = scripted_greedy(inst, table, true);
    CHECK(cost_lib.choice == cost_ref.choice);
    CHECK(cost_lib.objective == cost_ref.objective);

    const Assignment contact_lib = contact_based_baseline(inst, table);
    const Assignment contact_ref = scripted_greedy(inst, table, false);
    CHECK(contact_lib.choice == contact_ref.choice);
    CHECK(contact_lib.feasible);
    CHECK(cost_lib.feasible);
  }
}

TEST_CASE("baselines respect zero budgets and the server comparison") {
  // Zero budgets: everything lands on the server.
  Instance inst = make_instance({{2.0, 2.0}, {2.0, 2.0}}, {0.0, 0.0}, 5, 0.004);
  PairTable table = evaluate_all_pairs(inst);
  for (int c : cost_based_baseline(inst, table).choice) {
    CHECK(c == kServerChoice);
  }

  // Single task, single helper with room: the helper wins exactly when its
  // cost beats the server.
  inst = make_instance({{2.5}}, {100.0}, 6, 0.004);
  table = evaluate_all_pairs(inst);
  REQUIRE(table.at(0, 0).expected_cost < table.server_cost[0]);
  CHECK(cost_based_baseline(inst, table).choice[0] == 0);

  // Zero contact rate makes the helper exactly as expensive as the server,
  // so the task falls back to the server.
  inst = make_instance({{0.0}}, {100.0}, 6, 0.004);
  table = evaluate_all_pairs(inst);
  CHECK(contact_based_baseline(inst, table).choice[0] == kServerChoice);
  CHECK(cost_based_baseline(inst, table).choice[0] == kServerChoice);
}

TEST_CASE("contact baseline prefers the better-connected helper") {
  // Helper 1 has the higher rate; both fit and both beat the server.
  const Instance inst = make_instance({{1.0, 3.0}}, {100.0, 100.0}, 6, 0.004);
  const PairTable table = evaluate_all_pairs(inst);
  CHECK(contact_based_baseline(inst, table).choice[0] == 1);
  // The cost ordering switch is accepted and produces a valid assignment.
  const Assignment mean_mode =
      contact_based_baseline(inst, table, BaselineOrdering::mean_over_helpers);
  CHECK(mean_mode.feasible);
}

TEST_CASE("exact solver handles degenerate shapes and guards size") {
  GeneratorConfig cfg = small_config(510, 3, 0);
  const Instance empty_h = generate(cfg);
  const PairTable table0 = evaluate_all_pairs(empty_h);
  const Assignment opt0 = exact_solve(empty_h, table0);
  for (int c : opt0.choice) {
    CHECK(c == kServerChoice);
  }

  const Instance big = generate(small_config(511, 20, 3));
  const PairTable big_table = evaluate_all_pairs(big);
  CHECK_THROWS_AS((void)exact_solve(big, big_table), SizeError);
}

TEST_CASE("exact solver dominates every other method") {
  for (int trial = 0; trial < 10; ++trial) {
    const Instance inst = generate(small_config(800 + static_cast<std::uint64_t>(trial),
                                                5, 2));
    const PairTable table = evaluate_all_pairs(inst);
    const double opt = exact_solve(inst, table).objective;
    const double slack = 1e-9 * std::max(1.0, opt);
    CHECK(opt <= cost_based_baseline(inst, table).objective + slack);
    CHECK(opt <= contact_based_baseline(inst, table).objective + slack);
    CHECK(opt <= lagrangian_solve(inst, table).incumbent.objective + slack);
  }
}

TEST_CASE("exact solver reproduces knapsack optima exactly") {
  std::mt19937 rng(901);
  std::uniform_int_distribution<int> weight(0, 40);
  std::uniform_int_distribution<int> value(1, 60);
  std::uniform_int_distribution<int> item_count(1, 10);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = item_count(rng);
    std::vector<double> w(static_cast<size_t>(n));
    std::vector<double> g(static_cast<size_t>(n));
    std::vector<long long> wi(static_cast<size_t>(n));
    std::vector<long long> gi(static_cast<size_t>(n));
    double total_value = 0.0;
    for (int i = 0; i < n; ++i) {
      wi[static_cast<size_t>(i)] = weight(rng);
      gi[static_cast<size_t>(i)] = value(rng);
      w[static_cast<size_t>(i)] = static_cast<double>(wi[static_cast<size_t>(i)]);
      g[static_cast<size_t>(i)] = static_cast<double>(gi[static_cast<size_t>(i)]);
      total_value += g[static_cast<size_t>(i)];
    }
    const long long capacity = weight(rng) * 3;

    // Tiny epsilon keeps every floating-point correction below one ulp of
    // the objective, so the identity is exact.
    const Instance inst = build_knapsack_reduction(
        w, g, static_cast<double>(capacity), 1e-30);
    const PairTable table = evaluate_all_pairs(inst);
    const Assignment best = exact_solve(inst, table);
    const long long dp = oracle::knapsack_dp(wi, gi, capacity);
    CHECK(best.objective == total_value - static_cast<double>(dp));
  }
}

TEST_CASE("solution export round trips") {
  const Instance inst = generate(small_config(512, 4, 2));
  const PairTable table = evaluate_all_pairs(inst);
  const DualState state = lagrangian_solve(inst, table);
  const std::string text =
      solution_to_json("lagrangian", table, state.incumbent, &state);
  const SolutionFile parsed = solution_from_json(text);
  CHECK(parsed.solver == "lagrangian");
  CHECK(parsed.choice == state.incumbent.choice);
  CHECK(parsed.objective == state.incumbent.objective);
  REQUIRE(parsed.lower_bound.has_value());
  CHECK(*parsed.lower_bound == state.lower_bound);

  const std::filesystem::path path =
      std::filesystem::temp_directory_path() / "d2dto_test_solution.json";
  save_solution("lagrangian", table, state.incumbent, &state, path);
  const SolutionFile from_file = load_solution(path);
  CHECK(from_file.choice == parsed.choice);
  std::filesystem::remove(path);

  // Baseline solutions carry no bounds or trace.
  const Assignment greedy = cost_based_baseline(inst, table);
  const SolutionFile plain =
      solution_from_json(solution_to_json("cost_based", table, greedy));
  CHECK(plain.solver == "cost_based");
  CHECK(plain.choice == greedy.choice);
  CHECK_FALSE(plain.lower_bound.has_value());
}

}  // TEST_SUITE
