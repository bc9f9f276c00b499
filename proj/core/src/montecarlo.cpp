#include "d2dto/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

#include "rng_util.hpp"

namespace d2dto {

namespace {

using detail::mix_seed;
using detail::uniform01;

// Inverse-CDF sampler for the per-slot Poisson contact count. The table is
// extended until the tail mass is below 1e-16; the expected scan length is
// about 1 + mean.
class PoissonSlotSampler {
 public:
  explicit PoissonSlotSampler(double mean) {
    double pmf = std::exp(-mean);
    double cdf = pmf;
    cdf_.push_back(cdf);
    int k = 0;
    while (1.0 - cdf > 1e-16 && k < 2048) {
      ++k;
      pmf *= mean / static_cast<double>(k);
      cdf += pmf;
      cdf_.push_back(cdf);
    }
  }

  template <typename Rng>
  int operator()(Rng& rng) const {
    const double u = uniform01(rng);
    for (size_t i = 0; i < cdf_.size(); ++i) {
      if (u < cdf_[i]) {
        return static_cast<int>(i);
      }
    }
    return static_cast<int>(cdf_.size());
  }

 private:
  std::vector<double> cdf_;
};

struct ContactDraw {
  int before_count = 0;   // meetings in slots 1..t, capped at 2
  int second_slot = 0;    // slot of the second meeting, when before_count >= 2
  int first_after = 0;    // first meeting slot in t+1..d, 0 if none
};

ContactDraw draw_slot_poisson(const PoissonSlotSampler& sampler, int timer,
                              int deadline, std::mt19937_64& rng) {
  ContactDraw d;
  for (int k = 1; k <= timer; ++k) {
    d.before_count += sampler(rng);
    if (d.before_count >= 2) {
      d.second_slot = k;
      return d;
    }
  }
  for (int k = timer + 1; k <= deadline; ++k) {
    if (sampler(rng) > 0) {
      d.first_after = k;
      return d;
    }
  }
  return d;
}

ContactDraw draw_exponential(const ContactPair& pair, int timer, int deadline,
                             std::mt19937_64& rng) {
  ContactDraw d;
  if (pair.rate <= 0.0) {
    return d;
  }
  const double horizon_time = static_cast<double>(deadline) * pair.slot_duration;
  double clock = 0.0;
  while (true) {
    clock += -std::log1p(-uniform01(rng)) / pair.rate;
    if (!(clock <= horizon_time)) {
      return d;
    }
    const int slot = std::min(
        deadline,
        std::max(1, static_cast<int>(std::ceil(clock / pair.slot_duration))));
    if (slot <= timer) {
      ++d.before_count;
      if (d.before_count >= 2) {
        d.second_slot = slot;
        return d;
      }
    } else {
      d.first_after = slot;
      return d;
    }
  }
}

TrialOutcome classify(const ContactDraw& d, const TaskSpec& task,
                      const CompletionCost& completion, int timer) {
  TrialOutcome out;
  if (d.before_count >= 2) {
    out.event = 1;
    out.cost = completion(d.second_slot) + task.helper_proc_cost;
    out.helper_energy = task.processing_energy;
    out.bs_communications = 0;
  } else if (d.before_count == 1 && d.first_after > 0) {
    out.event = 2;
    out.cost = completion(d.first_after) + task.helper_proc_cost;
    out.helper_energy = task.processing_energy;
    out.bs_communications = 0;
  } else if (d.before_count == 0 && d.first_after > 0) {
    out.event = 3;
    out.cost = completion(d.first_after) + task.helper_proc_cost +
               2.0 * task.bs_comm_cost;
    out.helper_energy = task.processing_energy + task.bs_comm_energy;
    out.bs_communications = 2;
  } else if (d.before_count == 1) {
    out.event = 4;
    out.cost = completion(timer) + task.helper_proc_cost + 2.0 * task.bs_comm_cost;
    out.helper_energy = task.processing_energy + task.bs_comm_energy;
    out.bs_communications = 2;
  } else {
    out.event = 5;
    out.cost = task.server_proc_cost + 2.0 * task.server_comm_cost;
    out.helper_energy = 0.0;
    out.bs_communications = 0;
  }
  return out;
}

struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

struct ChunkStats {
  long long count[5] = {0, 0, 0, 0, 0};
  double cost = 0.0;
  double cost_sq = 0.0;
  double energy = 0.0;
  double energy_sq = 0.0;
  double event_cost[5] = {};
  double event_cost_sq[5] = {};
};

constexpr long long kChunkTrials = 1 << 16;

void check_simulation_args(const ContactPair& pair, const TaskSpec& task,
                           int timer, long long trials) {
  pair.validate();
  task.validate();
  if (timer < 0 || timer > task.deadline) {
    throw std::domain_error("timer outside 0..deadline");
  }
  if (trials < 1) {
    throw std::domain_error("trial count must be >= 1");
  }
}

ChunkStats run_chunk(const ContactPair& pair, const TaskSpec& task,
                     const CompletionCost& completion, int timer,
                     long long trials, std::uint64_t chunk_seed,
                     SamplingMethod method) {
  std::mt19937_64 rng(chunk_seed);
  const PoissonSlotSampler sampler(pair.rate * pair.slot_duration);
  const int deadline = task.deadline;

  ChunkStats stats;
  KahanSum cost, cost_sq, energy, energy_sq;
  KahanSum event_cost[5], event_cost_sq[5];
  for (long long i = 0; i < trials; ++i) {
    const ContactDraw draw = method == SamplingMethod::slot_poisson
                                 ? draw_slot_poisson(sampler, timer, deadline, rng)
                                 : draw_exponential(pair, timer, deadline, rng);
    const TrialOutcome out = classify(draw, task, completion, timer);
    ++stats.count[out.event - 1];
    cost.add(out.cost);
    cost_sq.add(out.cost * out.cost);
    energy.add(out.helper_energy);
    energy_sq.add(out.helper_energy * out.helper_energy);
    event_cost[out.event - 1].add(out.cost);
    event_cost_sq[out.event - 1].add(out.cost * out.cost);
  }
  stats.cost = cost.sum;
  stats.cost_sq = cost_sq.sum;
  stats.energy = energy.sum;
  stats.energy_sq = energy_sq.sum;
  for (int e = 0; e < 5; ++e) {
    stats.event_cost[e] = event_cost[e].sum;
    stats.event_cost_sq[e] = event_cost_sq[e].sum;
  }
  return stats;
}

double stderr_of_mean(double sum, double sum_sq, long long n) {
  const double mean = sum / static_cast<double>(n);
  const double variance =
      std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
  return std::sqrt(variance / static_cast<double>(n));
}

}  // namespace

TrialOutcome simulate_trial(const ContactPair& pair, const TaskSpec& task,
                            const CompletionCost& completion, int timer,
                            std::mt19937_64& rng, SamplingMethod method) {
  check_simulation_args(pair, task, timer, 1);
  ContactDraw draw;
  if (method == SamplingMethod::slot_poisson) {
    const PoissonSlotSampler sampler(pair.rate * pair.slot_duration);
    draw = draw_slot_poisson(sampler, timer, task.deadline, rng);
  } else {
    draw = draw_exponential(pair, timer, task.deadline, rng);
  }
  return classify(draw, task, completion, timer);
}

SimulationSummary simulate_pair(const ContactPair& pair, const TaskSpec& task,
                                const CompletionCost& completion, int timer,
                                long long trials, std::uint64_t seed,
                                SamplingMethod method, int threads) {
  check_simulation_args(pair, task, timer, trials);

  const long long num_chunks = (trials + kChunkTrials - 1) / kChunkTrials;
  std::vector<ChunkStats> chunks(static_cast<size_t>(num_chunks));
  auto chunk_trials = [&](long long c) {
    return std::min(kChunkTrials, trials - c * kChunkTrials);
  };

  int worker_count = threads > 0
                         ? threads
                         : static_cast<int>(std::thread::hardware_concurrency());
  worker_count = std::max(1, std::min<int>(worker_count,
                                           static_cast<int>(num_chunks)));
  if (worker_count == 1) {
    for (long long c = 0; c < num_chunks; ++c) {
      chunks[static_cast<size_t>(c)] =
          run_chunk(pair, task, completion, timer, chunk_trials(c),
                    mix_seed(seed, static_cast<std::uint64_t>(c)), method);
    }
  } else {
    std::atomic<long long> next{0};
    auto worker = [&]() {
      while (true) {
        const long long c = next.fetch_add(1);
        if (c >= num_chunks) {
          break;
        }
        chunks[static_cast<size_t>(c)] =
            run_chunk(pair, task, completion, timer, chunk_trials(c),
                      mix_seed(seed, static_cast<std::uint64_t>(c)), method);
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(worker_count));
    for (int w = 0; w < worker_count; ++w) {
      pool.emplace_back(worker);
    }
    for (auto& t : pool) {
      t.join();
    }
  }

  // Combine in chunk order so the result does not depend on thread timing.
  long long count[5] = {0, 0, 0, 0, 0};
  KahanSum cost, cost_sq, energy, energy_sq;
  KahanSum event_cost[5], event_cost_sq[5];
  for (const ChunkStats& s : chunks) {
    for (int e = 0; e < 5; ++e) {
      count[e] += s.count[e];
      event_cost[e].add(s.event_cost[e]);
      event_cost_sq[e].add(s.event_cost_sq[e]);
    }
    cost.add(s.cost);
    cost_sq.add(s.cost_sq);
    energy.add(s.energy);
    energy_sq.add(s.energy_sq);
  }

  SimulationSummary summary;
  summary.trials = trials;
  const double n = static_cast<double>(trials);
  summary.mean_cost = cost.sum / n;
  summary.stderr_cost = stderr_of_mean(cost.sum, cost_sq.sum, trials);
  summary.mean_energy = energy.sum / n;
  summary.stderr_energy = stderr_of_mean(energy.sum, energy_sq.sum, trials);
  for (int e = 0; e < 5; ++e) {
    const double freq = static_cast<double>(count[e]) / n;
    summary.event_frequency[static_cast<size_t>(e)] = freq;
    summary.event_frequency_stderr[static_cast<size_t>(e)] =
        std::sqrt(std::max(0.0, freq * (1.0 - freq)) / n);
    summary.event_cost[static_cast<size_t>(e)] = event_cost[e].sum / n;
    summary.event_cost_stderr[static_cast<size_t>(e)] =
        stderr_of_mean(event_cost[e].sum, event_cost_sq[e].sum, trials);
  }
  return summary;
}

namespace {

// A sample standard error is misleading when a rare event dominates the
// variance and never occurred in the sample, so validation tests against the
// standard error implied by the analytic event model instead.
struct AnalyticVariance {
  double cost = 0.0;
  double energy = 0.0;
};

AnalyticVariance pair_variance(const ContactPair& pair, const TaskSpec& task,
                               const CompletionCost& completion, int timer,
                               double mean_cost, double mean_energy) {
  const int d = task.deadline;
  const double helper_extra = task.helper_proc_cost;
  const double bs_extra = task.helper_proc_cost + 2.0 * task.bs_comm_cost;

  double second_moment = 0.0;
  double prev = 0.0;
  for (int k = 1; k <= timer; ++k) {
    const double ge2 = prob_at_least(pair, 1, k, 2);
    const double c = completion(k) + helper_extra;
    second_moment += c * c * (ge2 - prev);
    prev = ge2;
  }
  const double before0 = prob_exactly(pair, 1, timer, 0);
  const double before1 = prob_exactly(pair, 1, timer, 1);
  prev = 0.0;
  for (int k = timer + 1; k <= d; ++k) {
    const double ge1 = prob_at_least(pair, timer + 1, k, 1);
    const double weight = ge1 - prev;
    prev = ge1;
    const double c2 = completion(k) + helper_extra;
    const double c3 = completion(k) + bs_extra;
    second_moment += before1 * c2 * c2 * weight + before0 * c3 * c3 * weight;
  }
  const EventVector pi = event_probabilities(pair, task, timer);
  const double c4 = completion(timer) + bs_extra;
  const double c5 = server_fallback_cost(task);
  second_moment += pi[3] * c4 * c4 + pi[4] * c5 * c5;

  const double ep = task.processing_energy;
  const double epc = task.processing_energy + task.bs_comm_energy;
  const double energy_moment = (pi[0] + pi[1]) * ep * ep + (pi[2] + pi[3]) * epc * epc;

  AnalyticVariance var;
  var.cost = std::max(0.0, second_moment - mean_cost * mean_cost);
  var.energy = std::max(0.0, energy_moment - mean_energy * mean_energy);
  return var;
}

double z_score(double analytic, double empirical, double se) {
  const double diff = std::abs(analytic - empirical);
  // Differences at floating-point noise scale are never significant.
  if (diff <= 1e-9 * std::max(1.0, std::abs(analytic))) {
    return 0.0;
  }
  if (se == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return diff / se;
}

}  // namespace

ValidationReport validate_assignment(const Instance& instance,
                                     const Assignment& assignment,
                                     const PairTable& table, long long trials,
                                     std::uint64_t seed, double z_threshold) {
  if (static_cast<int>(assignment.choice.size()) != table.num_requesters) {
    throw std::invalid_argument("assignment size must equal R");
  }
  if (!assignment.feasible ||
      !assignment_feasible(table, assignment.choice, instance.helper_energy)) {
    throw std::invalid_argument("validate_assignment rejects infeasible assignments");
  }

  ValidationReport report;
  report.trials_per_pair = trials;
  report.z_threshold = z_threshold;
  report.total_analytic_cost = assignment.objective;

  KahanSum empirical_total;
  for (int r = 0; r < table.num_requesters; ++r) {
    const int h = assignment.choice[static_cast<size_t>(r)];
    if (h == kServerChoice) {
      empirical_total.add(table.server_cost[static_cast<size_t>(r)]);
      continue;
    }
    const PairEvaluation& eval = table.at(r, h);
    const ContactPair pair = instance.pair(r, h);
    const TaskSpec task = instance.task_for_pair(r, h);
    const SimulationSummary sim =
        simulate_pair(pair, task, instance.completion_cost, eval.timer, trials,
                      mix_seed(seed, static_cast<std::uint64_t>(r)));
    const AnalyticVariance var =
        pair_variance(pair, task, instance.completion_cost, eval.timer,
                      eval.expected_cost, eval.expected_energy);

    PairValidationRow row;
    row.requester = r;
    row.helper = h;
    row.timer = eval.timer;
    row.analytic_cost = eval.expected_cost;
    row.empirical_cost = sim.mean_cost;
    row.cost_stderr = std::sqrt(var.cost / static_cast<double>(trials));
    row.cost_z = z_score(eval.expected_cost, sim.mean_cost, row.cost_stderr);
    row.analytic_energy = eval.expected_energy;
    row.empirical_energy = sim.mean_energy;
    row.energy_stderr = std::sqrt(var.energy / static_cast<double>(trials));
    row.energy_z = z_score(eval.expected_energy, sim.mean_energy, row.energy_stderr);
    row.pass = row.cost_z <= z_threshold && row.energy_z <= z_threshold;
    report.pass = report.pass && row.pass;
    report.rows.push_back(row);
    empirical_total.add(sim.mean_cost);
  }
  report.total_empirical_cost = empirical_total.sum;
  return report;
}

std::string ValidationReport::to_text() const {
  std::string out;
  char line[512];
  std::snprintf(line, sizeof(line),
                "validation: %zu simulated pairs, %lld trials each, z threshold %.1f\n",
                rows.size(), trials_per_pair, z_threshold);
  out += line;
  for (const PairValidationRow& r : rows) {
    std::snprintf(line, sizeof(line),
                  "  r=%d h=%d t*=%d  cost %.6e vs %.6e (se %.3e, z %.2f)  "
                  "energy %.6e vs %.6e (se %.3e, z %.2f)  %s\n",
                  r.requester, r.helper, r.timer, r.analytic_cost,
                  r.empirical_cost, r.cost_stderr, r.cost_z, r.analytic_energy,
                  r.empirical_energy, r.energy_stderr, r.energy_z,
                  r.pass ? "ok" : "FLAGGED");
    out += line;
  }
  std::snprintf(line, sizeof(line),
                "total expected cost: analytic %.6e, empirical %.6e\nresult: %s\n",
                total_analytic_cost, total_empirical_cost,
                pass ? "PASS" : "FAIL");
  out += line;
  return out;
}

}  // namespace d2dto
