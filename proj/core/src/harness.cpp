#include "d2dto/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "d2dto/errors.hpp"
#include "rng_util.hpp"

namespace d2dto {

namespace {

// Fixed solver order for CSV rows, independent of the configured order.
constexpr SolverKind kSolverOrder[] = {
    SolverKind::lagrangian, SolverKind::cost_based, SolverKind::contact_based,
    SolverKind::exact, SolverKind::lower_bound};

std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

bool enabled(const std::vector<SolverKind>& solvers, SolverKind kind) {
  return std::find(solvers.begin(), solvers.end(), kind) != solvers.end();
}

struct Accumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  long long n = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++n;
  }
  double mean() const { return sum / static_cast<double>(n); }
  double stderr_mean() const {
    const double m = mean();
    const double var = std::max(0.0, sum_sq / static_cast<double>(n) - m * m);
    return std::sqrt(var / static_cast<double>(n));
  }
};

GeneratorConfig config_at(const GeneratorConfig& base, SweepVariable variable,
                          double value, std::uint64_t seed) {
  GeneratorConfig cfg = base;
  if (variable == SweepVariable::helpers) {
    cfg.num_helpers = static_cast<int>(value);
  } else {
    cfg.alpha = value;
  }
  cfg.seed = seed;
  return cfg;
}

}  // namespace

std::string solver_name(SolverKind kind) {
  switch (kind) {
    case SolverKind::lagrangian: return "lagrangian";
    case SolverKind::cost_based: return "cost_based";
    case SolverKind::contact_based: return "contact_based";
    case SolverKind::exact: return "exact";
    case SolverKind::lower_bound: return "lower_bound";
  }
  return "unknown";
}

std::optional<SolverKind> solver_from_name(const std::string& name) {
  for (SolverKind kind : kSolverOrder) {
    if (name == solver_name(kind)) {
      return kind;
    }
  }
  // Accept dash spelling from the command line.
  if (name == "cost-based") return SolverKind::cost_based;
  if (name == "contact-based") return SolverKind::contact_based;
  if (name == "lower-bound") return SolverKind::lower_bound;
  return std::nullopt;
}

std::uint64_t replicate_seed(std::uint64_t base_seed, int point_index,
                             int replicate_index) {
  return detail::mix_seed(detail::mix_seed(base_seed,
                                           static_cast<std::uint64_t>(point_index)),
                          static_cast<std::uint64_t>(replicate_index));
}

void SweepConfig::validate() const {
  std::vector<std::string> problems;
  if (values.empty()) {
    problems.push_back("values: at least one sweep value is required");
  }
  if (instances_per_point < 1) {
    problems.push_back("instances_per_point: must be >= 1");
  }
  if (solvers.empty()) {
    problems.push_back("solvers: at least one solver is required");
  }
  if (variable == SweepVariable::helpers) {
    for (double v : values) {
      if (v < 0.0 || v != std::floor(v)) {
        problems.push_back("values: helper counts must be non-negative integers");
        break;
      }
    }
  } else {
    for (double v : values) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        problems.push_back("values: alpha values must be finite and >= 0");
        break;
      }
    }
  }
  if (enabled(solvers, SolverKind::exact)) {
    const int r = base.num_requesters;
    for (double v : values) {
      const int h = variable == SweepVariable::helpers ? static_cast<int>(v)
                                                       : base.num_helpers;
      if (r * std::log2(static_cast<double>(h) + 1.0) > 30.0) {
        problems.push_back("solvers: exact enumeration exceeds its size guard "
                           "for the requested dimensions");
        break;
      }
    }
  }
  try {
    base.validate();
  } catch (const ValidationError& e) {
    for (const auto& p : e.problems()) {
      problems.push_back("base." + p);
    }
  }
  if (!problems.empty()) {
    throw ValidationError(problems);
  }
}

std::vector<SweepRow> run_sweep(const SweepConfig& config) {
  config.validate();

  std::vector<SweepRow> rows;
  for (size_t point = 0; point < config.values.size(); ++point) {
    const double value = config.values[point];
    std::map<SolverKind, Accumulator> cost;
    Accumulator lower_bound;

    const bool run_lagrangian = enabled(config.solvers, SolverKind::lagrangian) ||
                                enabled(config.solvers, SolverKind::lower_bound);
    for (int rep = 0; rep < config.instances_per_point; ++rep) {
      const GeneratorConfig cfg = config_at(
          config.base, config.variable, value,
          replicate_seed(config.base_seed, static_cast<int>(point), rep));
      const Instance instance = generate(cfg);
      const PairTable table = evaluate_all_pairs(instance);

      if (run_lagrangian) {
        const DualState dual =
            lagrangian_solve(instance, table, config.solver_params);
        cost[SolverKind::lagrangian].add(dual.incumbent.objective);
        lower_bound.add(dual.lower_bound);
      }
      if (enabled(config.solvers, SolverKind::cost_based)) {
        cost[SolverKind::cost_based].add(
            cost_based_baseline(instance, table).objective);
      }
      if (enabled(config.solvers, SolverKind::contact_based)) {
        cost[SolverKind::contact_based].add(
            contact_based_baseline(instance, table).objective);
      }
      if (enabled(config.solvers, SolverKind::exact)) {
        cost[SolverKind::exact].add(exact_solve(instance, table).objective);
      }
    }

    for (SolverKind kind : kSolverOrder) {
      if (!enabled(config.solvers, kind)) {
        continue;
      }
      SweepRow row;
      row.sweep_value = value;
      row.solver = solver_name(kind);
      if (kind == SolverKind::lower_bound) {
        row.mean_cost = lower_bound.mean();
        row.stderr_cost = lower_bound.stderr_mean();
      } else {
        row.mean_cost = cost[kind].mean();
        row.stderr_cost = cost[kind].stderr_mean();
        if (kind == SolverKind::lagrangian) {
          row.mean_lower_bound = lower_bound.mean();
        }
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "sweep_value,solver,mean_cost,stderr_cost,mean_lower_bound\n";
  for (const SweepRow& r : rows) {
    out += format_value(r.sweep_value);
    out += ',';
    out += r.solver;
    out += ',';
    out += format_full(r.mean_cost);
    out += ',';
    out += format_full(r.stderr_cost);
    out += ',';
    if (r.mean_lower_bound.has_value()) {
      out += format_full(*r.mean_lower_bound);
    }
    out += '\n';
  }
  return out;
}

void write_sweep_csv(const std::vector<SweepRow>& rows,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ParseError("cannot open '" + path.string() + "' for writing");
  }
  out << sweep_csv(rows);
}

void TimerCdfConfig::validate() const {
  std::vector<std::string> problems;
  if (alphas.empty()) {
    problems.push_back("alphas: at least one value is required");
  }
  for (double a : alphas) {
    if (!(a >= 0.0) || !std::isfinite(a)) {
      problems.push_back("alphas: values must be finite and >= 0");
      break;
    }
  }
  if (instances_per_point < 1) {
    problems.push_back("instances_per_point: must be >= 1");
  }
  try {
    base.validate();
  } catch (const ValidationError& e) {
    for (const auto& p : e.problems()) {
      problems.push_back("base." + p);
    }
  }
  if (!problems.empty()) {
    throw ValidationError(problems);
  }
}

std::vector<TimerCdfRow> timer_cdf(const TimerCdfConfig& config) {
  config.validate();

  std::vector<TimerCdfRow> rows;
  for (size_t point = 0; point < config.alphas.size(); ++point) {
    const double alpha = config.alphas[point];
    std::vector<double> relative_timers;

    for (int rep = 0; rep < config.instances_per_point; ++rep) {
      GeneratorConfig cfg = config.base;
      cfg.alpha = alpha;
      cfg.seed = replicate_seed(config.base_seed, static_cast<int>(point), rep);
      const Instance instance = generate(cfg);
      const PairTable table = evaluate_all_pairs(instance);
      const DualState dual =
          lagrangian_solve(instance, table, config.solver_params);
      for (int r = 0; r < table.num_requesters; ++r) {
        const int h = dual.incumbent.choice[static_cast<size_t>(r)];
        if (h == kServerChoice) {
          continue;
        }
        const int deadline = instance.tasks[static_cast<size_t>(r)].deadline;
        relative_timers.push_back(static_cast<double>(table.at(r, h).timer) /
                                  static_cast<double>(deadline));
      }
    }

    std::sort(relative_timers.begin(), relative_timers.end());
    const long long assigned = static_cast<long long>(relative_timers.size());
    for (int g = 0; g <= 20; ++g) {
      const double grid = static_cast<double>(g) / 20.0;
      TimerCdfRow row;
      row.alpha = alpha;
      row.relative_timer = grid;
      row.assigned_count = assigned;
      if (assigned > 0) {
        const auto it = std::upper_bound(relative_timers.begin(),
                                         relative_timers.end(), grid + 1e-12);
        row.cumulative_fraction =
            static_cast<double>(it - relative_timers.begin()) /
            static_cast<double>(assigned);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::string timer_cdf_csv(const std::vector<TimerCdfRow>& rows) {
  std::string out = "alpha,relative_timer,cumulative_fraction,assigned_count\n";
  for (const TimerCdfRow& r : rows) {
    out += format_value(r.alpha);
    out += ',';
    out += format_value(r.relative_timer);
    out += ',';
    out += format_full(r.cumulative_fraction);
    out += ',';
    out += std::to_string(r.assigned_count);
    out += '\n';
  }
  return out;
}

void write_timer_cdf_csv(const std::vector<TimerCdfRow>& rows,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ParseError("cannot open '" + path.string() + "' for writing");
  }
  out << timer_cdf_csv(rows);
}

std::optional<double> SolveSummary::gap_percent() const {
  double reference;
  if (exact_objective.has_value()) {
    reference = *exact_objective;
  } else if (dual.has_value()) {
    reference = dual->lower_bound;
  } else {
    return std::nullopt;
  }
  if (assignment.objective == 0.0 && reference == 0.0) {
    return 0.0;
  }
  if (assignment.objective == 0.0) {
    return std::nullopt;
  }
  return 100.0 * (assignment.objective - reference) / assignment.objective;
}

std::string SolveSummary::to_text() const {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "solver: %s\n", solver.c_str());
  out += line;
  std::snprintf(line, sizeof(line), "objective: %.10g (%s)\n",
                assignment.objective, assignment.feasible ? "feasible" : "infeasible");
  out += line;
  if (dual.has_value()) {
    std::snprintf(line, sizeof(line),
                  "bounds: lower %.10g, upper %.10g, iterations %d\n",
                  dual->lower_bound, dual->upper_bound, dual->iterations);
    out += line;
  }
  if (exact_objective.has_value()) {
    std::snprintf(line, sizeof(line), "exact optimum: %.10g\n", *exact_objective);
    out += line;
  }
  if (const auto gap = gap_percent(); gap.has_value()) {
    std::snprintf(line, sizeof(line), "gap: %.3f%% (vs %s)\n", *gap,
                  exact_objective.has_value() ? "exact optimum" : "lower bound");
    out += line;
  }
  std::snprintf(line, sizeof(line), "assignment: %d on helpers, %d on server\n",
                helper_assigned, server_assigned);
  out += line;
  return out;
}

SolveSummary solve_one(const Instance& instance, const PairTable& table,
                       SolverKind kind, const SolverParams& params,
                       bool compute_exact) {
  SolveSummary summary;
  summary.solver = solver_name(kind);
  switch (kind) {
    case SolverKind::lagrangian:
    case SolverKind::lower_bound: {
      DualState dual = lagrangian_solve(instance, table, params);
      summary.assignment = dual.incumbent;
      summary.dual = std::move(dual);
      summary.solver = solver_name(SolverKind::lagrangian);
      break;
    }
    case SolverKind::cost_based:
      summary.assignment = cost_based_baseline(instance, table);
      break;
    case SolverKind::contact_based:
      summary.assignment = contact_based_baseline(instance, table);
      break;
    case SolverKind::exact:
      summary.assignment = exact_solve(instance, table);
      break;
  }
  if (compute_exact && kind != SolverKind::exact) {
    summary.exact_objective = exact_solve(instance, table).objective;
  }
  for (int c : summary.assignment.choice) {
    if (c == kServerChoice) {
      ++summary.server_assigned;
    } else {
      ++summary.helper_assigned;
    }
  }
  return summary;
}

}  // namespace d2dto
