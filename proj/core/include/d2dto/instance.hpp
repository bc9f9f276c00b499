#ifndef D2DTO_INSTANCE_HPP_
#define D2DTO_INSTANCE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "d2dto/cost_model.hpp"

namespace d2dto {

// Dense row-major matrix of doubles.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), fill) {}

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  bool operator==(const Matrix&) const = default;
};

// One full offloading problem: tasks, helper energy budgets, the
// requester-helper contact-rate matrix, the slotted horizon and the
// completion-cost function.
struct Instance {
  std::vector<TaskSpec> tasks;        // R entries
  std::vector<double> helper_energy;  // E_h, H entries (Joules)
  Matrix contact_rates;               // R x H
  std::optional<Matrix> helper_proc_costs;  // per-pair override, R x H
  int horizon = 24;                   // T, slots
  double slot_duration = 1.0;         // theta
  CompletionCost completion_cost;

  int num_requesters() const { return static_cast<int>(tasks.size()); }
  int num_helpers() const { return static_cast<int>(helper_energy.size()); }

  // Task view for one requester-helper pair; applies the per-pair helper
  // processing cost override when present.
  TaskSpec task_for_pair(int requester, int helper) const;

  ContactPair pair(int requester, int helper) const {
    return ContactPair{contact_rates.at(requester, helper), slot_duration};
  }

  void validate() const;  // throws ValidationError listing every problem
};

// Fixed unit convention used by the generator's energy arithmetic.
inline constexpr double kBitsPerMegabyte = 8.0e6;

// Randomized scenario generator configuration. Defaults reproduce the
// reference experiment setup; identical config + seed yields an identical
// instance byte for byte.
struct GeneratorConfig {
  int num_requesters = 15;  // R
  int num_helpers = 5;      // H
  int horizon = 24;         // T
  double slot_duration = 1.0;
  double alpha = 0.004;     // completion cost weight, f(t) = alpha t^2

  double helper_energy_min_j = 1000.0;
  double helper_energy_max_j = 3000.0;
  double data_size_min_mb = 0.5;
  double data_size_max_mb = 5.0;
  double cycles_per_bit_min = 2000.0;
  double cycles_per_bit_max = 37000.0;
  double energy_per_cycle_j = 1.0 / 730.0e6;
  double energy_per_bit_j = 1.42e-7;

  // Cost coefficients as multiples of the matching task energy.
  double helper_proc_cost_factor = 1.0;     // delta^p_rh = factor * e^p
  double server_proc_cost_factor = 10.0;    // delta^p_rN = factor * e^p
  double bs_comm_cost_factor = 100.0;       // delta^c_rB = factor * e^c
  double server_comm_cost_factor = 1000.0;  // delta^c_rN = factor * e^c

  int deadline_min = 1;
  int deadline_max = 24;

  // Contact rates are Gamma(shape, scale) distributed, in contacts per unit
  // time.
  double contact_rate_shape = 0.5;
  double contact_rate_scale = 1.0;

  std::uint64_t seed = 0;

  void validate() const;  // throws ValidationError listing every problem
};

// Draws a random instance. Helper energies and task deadlines are coupled so
// that tasks needing more energy get longer deadlines.
Instance generate(const GeneratorConfig& config);

// Builds the offloading instance that encodes a 0/1 knapsack: one helper
// with the knapsack capacity as its energy budget, one requester per item,
// contact rate ln(1/epsilon) so the pair meets almost surely, zero
// completion/helper costs and server cost equal to the item value. Solving
// the instance exactly solves the knapsack.
Instance build_knapsack_reduction(std::span<const double> weights,
                                  std::span<const double> values,
                                  double capacity, double epsilon);

// Instance (de)serialization: a single self-describing JSON document with a
// schema tag, all scalar parameters and the explicit rate matrix. Numbers
// round-trip bit exactly; unknown fields are rejected by name.
std::string instance_to_json(const Instance& instance);
Instance instance_from_json(const std::string& text);

void save_instance(const Instance& instance, const std::filesystem::path& path);
Instance load_instance(const std::filesystem::path& path);

}  // namespace d2dto

#endif  // D2DTO_INSTANCE_HPP_
