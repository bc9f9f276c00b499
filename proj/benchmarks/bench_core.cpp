#include <benchmark/benchmark.h>

#include "d2dto/cost_model.hpp"
#include "d2dto/harness.hpp"
#include "d2dto/instance.hpp"
#include "d2dto/montecarlo.hpp"
#include "d2dto/solvers.hpp"

namespace {

using namespace d2dto;

TaskSpec bench_task(int deadline) {
  TaskSpec task;
  task.processing_energy = 500.0;
  task.bs_comm_energy = 3.0;
  task.deadline = deadline;
  task.helper_proc_cost = 500.0;
  task.server_proc_cost = 5000.0;
  task.bs_comm_cost = 300.0;
  task.server_comm_cost = 3000.0;
  return task;
}

// The timer scan should stay linear in the deadline.
void BM_OptimalTimer(benchmark::State& state) {
  const int deadline = static_cast<int>(state.range(0));
  const TaskSpec task = bench_task(deadline);
  const ContactPair pair{0.4, 1.0};
  const CompletionCost f = CompletionCost::quadratic(0.004);
  for (auto _ : state) {
    benchmark::DoNotOptimize(optimal_timer(pair, task, f).expected_cost);
  }
  state.SetComplexityN(deadline);
}
BENCHMARK(BM_OptimalTimer)->RangeMultiplier(2)->Range(6, 96)->Complexity();

void BM_EvaluateAllPairs(benchmark::State& state) {
  GeneratorConfig cfg;
  cfg.num_requesters = 15;
  cfg.num_helpers = static_cast<int>(state.range(0));
  cfg.seed = 4242;
  const Instance inst = generate(cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_all_pairs(inst).evals.size());
  }
}
BENCHMARK(BM_EvaluateAllPairs)->Arg(3)->Arg(5)->Arg(7);

void BM_LagrangianSolve(benchmark::State& state) {
  GeneratorConfig cfg;
  cfg.num_requesters = 15;
  cfg.num_helpers = 5;
  cfg.seed = 4242;
  const Instance inst = generate(cfg);
  const PairTable table = evaluate_all_pairs(inst);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lagrangian_solve(inst, table).incumbent.objective);
  }
}
BENCHMARK(BM_LagrangianSolve);

void BM_SimulatePair(benchmark::State& state) {
  const TaskSpec task = bench_task(12);
  const ContactPair pair{0.5, 1.0};
  const CompletionCost f = CompletionCost::quadratic(0.004);
  const long long trials = state.range(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        simulate_pair(pair, task, f, 6, trials, 99).mean_cost);
  }
  state.SetItemsProcessed(state.iterations() * trials);
}
BENCHMARK(BM_SimulatePair)->Arg(10000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
