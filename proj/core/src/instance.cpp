#include "d2dto/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "d2dto/errors.hpp"

namespace d2dto {

namespace {

using ojson = nlohmann::ordered_json;

constexpr const char* kInstanceSchema = "d2dto.instance.v1";

void require_interval(std::vector<std::string>& problems, const char* name,
                      double lo, double hi) {
  if (!(lo >= 0.0) || !std::isfinite(lo) || !std::isfinite(hi) || hi < lo) {
    problems.push_back(std::string(name) +
                       ": interval must satisfy 0 <= min <= max");
  }
}

}  // namespace

TaskSpec Instance::task_for_pair(int requester, int helper) const {
  TaskSpec task = tasks[static_cast<size_t>(requester)];
  if (helper_proc_costs.has_value()) {
    task.helper_proc_cost = helper_proc_costs->at(requester, helper);
  }
  return task;
}

void Instance::validate() const {
  std::vector<std::string> problems;
  const int r = num_requesters();
  const int h = num_helpers();
  if (r < 1) {
    problems.push_back("tasks: at least one requester is required");
  }
  if (horizon < 1) {
    problems.push_back("horizon: must be >= 1");
  }
  if (!(slot_duration > 0.0) || !std::isfinite(slot_duration)) {
    problems.push_back("slot_duration: must be finite and > 0");
  }
  for (int i = 0; i < r; ++i) {
    try {
      tasks[static_cast<size_t>(i)].validate();
    } catch (const std::exception& e) {
      problems.push_back("tasks[" + std::to_string(i) + "]: " + e.what());
    }
    if (tasks[static_cast<size_t>(i)].deadline > horizon) {
      problems.push_back("tasks[" + std::to_string(i) +
                         "]: deadline exceeds horizon");
    }
  }
  for (int i = 0; i < h; ++i) {
    const double e = helper_energy[static_cast<size_t>(i)];
    if (!(e >= 0.0) || !std::isfinite(e)) {
      problems.push_back("helper_energy[" + std::to_string(i) +
                         "]: must be finite and >= 0");
    }
  }
  if (contact_rates.rows != r || contact_rates.cols != h) {
    problems.push_back("contact_rates: dimensions must be R x H");
  } else {
    for (double v : contact_rates.data) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        problems.push_back("contact_rates: entries must be finite and >= 0");
        break;
      }
    }
  }
  if (helper_proc_costs.has_value()) {
    if (helper_proc_costs->rows != r || helper_proc_costs->cols != h) {
      problems.push_back("helper_proc_costs: dimensions must be R x H");
    } else {
      for (double v : helper_proc_costs->data) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
          problems.push_back("helper_proc_costs: entries must be finite and >= 0");
          break;
        }
      }
    }
  }
  if (!completion_cost.is_quadratic() &&
      completion_cost.values().size() < static_cast<size_t>(horizon) + 1) {
    problems.push_back("completion_cost: table must cover slots 0..horizon");
  }
  if (!problems.empty()) {
    throw ValidationError(problems);
  }
}

void GeneratorConfig::validate() const {
  std::vector<std::string> problems;
  if (num_requesters < 1) {
    problems.push_back("num_requesters: must be >= 1");
  }
  if (num_helpers < 0) {
    problems.push_back("num_helpers: must be >= 0");
  }
  if (horizon < 1) {
    problems.push_back("horizon: must be >= 1");
  }
  if (!(slot_duration > 0.0) || !std::isfinite(slot_duration)) {
    problems.push_back("slot_duration: must be finite and > 0");
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    problems.push_back("alpha: must be finite and >= 0");
  }
  require_interval(problems, "helper_energy", helper_energy_min_j,
                   helper_energy_max_j);
  require_interval(problems, "data_size", data_size_min_mb, data_size_max_mb);
  require_interval(problems, "cycles_per_bit", cycles_per_bit_min,
                   cycles_per_bit_max);
  if (!(energy_per_cycle_j >= 0.0) || !std::isfinite(energy_per_cycle_j)) {
    problems.push_back("energy_per_cycle_j: must be finite and >= 0");
  }
  if (!(energy_per_bit_j >= 0.0) || !std::isfinite(energy_per_bit_j)) {
    problems.push_back("energy_per_bit_j: must be finite and >= 0");
  }
  for (auto [name, factor] :
       {std::pair<const char*, double>{"helper_proc_cost_factor", helper_proc_cost_factor},
        {"server_proc_cost_factor", server_proc_cost_factor},
        {"bs_comm_cost_factor", bs_comm_cost_factor},
        {"server_comm_cost_factor", server_comm_cost_factor}}) {
    if (!(factor >= 0.0) || !std::isfinite(factor)) {
      problems.push_back(std::string(name) + ": must be finite and >= 0");
    }
  }
  if (deadline_min < 1 || deadline_max < deadline_min) {
    problems.push_back("deadline range: must satisfy 1 <= min <= max");
  } else if (deadline_max > horizon) {
    problems.push_back("deadline_max: must not exceed horizon");
  }
  if (!(contact_rate_shape > 0.0) || !std::isfinite(contact_rate_shape)) {
    problems.push_back("contact_rate_shape: must be finite and > 0");
  }
  if (!(contact_rate_scale > 0.0) || !std::isfinite(contact_rate_scale)) {
    problems.push_back("contact_rate_scale: must be finite and > 0");
  }
  if (!problems.empty()) {
    throw ValidationError(problems);
  }
}

Instance generate(const GeneratorConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  const int r_count = config.num_requesters;
  const int h_count = config.num_helpers;

  Instance inst;
  inst.horizon = config.horizon;
  inst.slot_duration = config.slot_duration;
  inst.completion_cost = CompletionCost::quadratic(config.alpha);

  std::uniform_real_distribution<double> energy_dist(config.helper_energy_min_j,
                                                     config.helper_energy_max_j);
  inst.helper_energy.reserve(static_cast<size_t>(h_count));
  for (int h = 0; h < h_count; ++h) {
    inst.helper_energy.push_back(energy_dist(rng));
  }

  std::uniform_real_distribution<double> data_dist(config.data_size_min_mb,
                                                   config.data_size_max_mb);
  std::uniform_real_distribution<double> cycles_dist(config.cycles_per_bit_min,
                                                     config.cycles_per_bit_max);
  inst.tasks.reserve(static_cast<size_t>(r_count));
  for (int r = 0; r < r_count; ++r) {
    const double bits = data_dist(rng) * kBitsPerMegabyte;
    const double cycles_per_bit = cycles_dist(rng);
    TaskSpec task;
    task.processing_energy = bits * cycles_per_bit * config.energy_per_cycle_j;
    task.bs_comm_energy = bits * config.energy_per_bit_j;
    task.helper_proc_cost = config.helper_proc_cost_factor * task.processing_energy;
    task.server_proc_cost = config.server_proc_cost_factor * task.processing_energy;
    task.bs_comm_cost = config.bs_comm_cost_factor * task.bs_comm_energy;
    task.server_comm_cost = config.server_comm_cost_factor * task.bs_comm_energy;
    task.deadline = 1;  // placeholder until the coupled assignment below
    inst.tasks.push_back(task);
  }

  std::gamma_distribution<double> rate_dist(config.contact_rate_shape,
                                            config.contact_rate_scale);
  inst.contact_rates = Matrix(r_count, h_count);
  for (int r = 0; r < r_count; ++r) {
    for (int h = 0; h < h_count; ++h) {
      inst.contact_rates.at(r, h) = rate_dist(rng);
    }
  }

  // Deadlines keep the configured marginal distribution, but are assigned by
  // energy rank so that a task needing more energy gets a longer deadline.
  std::uniform_int_distribution<int> deadline_dist(config.deadline_min,
                                                   config.deadline_max);
  std::vector<int> deadlines(static_cast<size_t>(r_count));
  for (auto& d : deadlines) {
    d = deadline_dist(rng);
  }
  std::sort(deadlines.begin(), deadlines.end());
  std::vector<int> order(static_cast<size_t>(r_count));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ea = inst.tasks[static_cast<size_t>(a)].processing_energy;
    const double eb = inst.tasks[static_cast<size_t>(b)].processing_energy;
    if (ea != eb) return ea < eb;
    return a < b;
  });
  for (int i = 0; i < r_count; ++i) {
    inst.tasks[static_cast<size_t>(order[static_cast<size_t>(i)])].deadline =
        deadlines[static_cast<size_t>(i)];
  }

  inst.validate();
  return inst;
}

Instance build_knapsack_reduction(std::span<const double> weights,
                                  std::span<const double> values,
                                  double capacity, double epsilon) {
  if (weights.size() != values.size() || weights.empty()) {
    throw std::domain_error(
        "knapsack reduction needs matching, non-empty weight/value lists");
  }
  if (!(epsilon > 0.0) || !(epsilon < 1.0)) {
    throw std::domain_error("knapsack reduction epsilon must be in (0, 1)");
  }
  if (!(capacity >= 0.0) || !std::isfinite(capacity)) {
    throw std::domain_error("knapsack capacity must be finite and >= 0");
  }
  for (size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0) || !(values[i] >= 0.0)) {
      throw std::domain_error("knapsack weights and values must be >= 0");
    }
  }

  const double rate = -std::log(epsilon);
  const int n = static_cast<int>(weights.size());

  Instance inst;
  inst.horizon = 1;
  inst.slot_duration = 1.0;
  inst.completion_cost = CompletionCost::quadratic(0.0);
  inst.helper_energy = {capacity};
  inst.contact_rates = Matrix(n, 1, rate);
  inst.tasks.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    TaskSpec task;
    task.processing_energy = weights[static_cast<size_t>(i)];
    task.bs_comm_energy = 0.0;
    task.deadline = 1;
    task.helper_proc_cost = 0.0;
    task.server_proc_cost = 0.0;
    task.bs_comm_cost = 0.0;
    task.server_comm_cost = values[static_cast<size_t>(i)] / 2.0;
    inst.tasks.push_back(task);
  }
  inst.validate();
  return inst;
}

namespace {

[[noreturn]] void unknown_field(const std::string& key, const std::string& context) {
  throw ParseError("unknown field '" + key + "' in " + context);
}

void expect_object(const ojson& j, const std::string& context) {
  if (!j.is_object()) {
    throw ParseError(context + " must be an object");
  }
}

void check_keys(const ojson& obj, const std::string& context,
                std::initializer_list<const char*> required,
                std::initializer_list<const char*> optional = {}) {
  expect_object(obj, context);
  for (const auto& item : obj.items()) {
    const std::string& key = item.key();
    const bool known =
        std::any_of(required.begin(), required.end(),
                    [&](const char* k) { return key == k; }) ||
        std::any_of(optional.begin(), optional.end(),
                    [&](const char* k) { return key == k; });
    if (!known) {
      unknown_field(key, context);
    }
  }
  for (const char* k : required) {
    if (!obj.contains(k)) {
      throw ParseError("missing field '" + std::string(k) + "' in " + context);
    }
  }
}

double get_double(const ojson& obj, const char* key, const std::string& context) {
  const ojson& v = obj.at(key);
  if (!v.is_number()) {
    throw ParseError("field '" + std::string(key) + "' in " + context +
                     " must be a number");
  }
  return v.get<double>();
}

int get_int(const ojson& obj, const char* key, const std::string& context) {
  const ojson& v = obj.at(key);
  if (!v.is_number_integer()) {
    throw ParseError("field '" + std::string(key) + "' in " + context +
                     " must be an integer");
  }
  return v.get<int>();
}

std::vector<double> get_double_array(const ojson& v, const std::string& context) {
  if (!v.is_array()) {
    throw ParseError(context + " must be an array");
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) {
      throw ParseError(context + " must contain only numbers");
    }
    out.push_back(e.get<double>());
  }
  return out;
}

Matrix get_matrix(const ojson& v, const std::string& context) {
  if (!v.is_array()) {
    throw ParseError(context + " must be an array of arrays");
  }
  Matrix m;
  m.rows = static_cast<int>(v.size());
  for (int r = 0; r < m.rows; ++r) {
    const auto row = get_double_array(v[static_cast<size_t>(r)],
                                      context + "[" + std::to_string(r) + "]");
    if (r == 0) {
      m.cols = static_cast<int>(row.size());
    } else if (static_cast<int>(row.size()) != m.cols) {
      throw ParseError(context + " rows must all have the same length");
    }
    m.data.insert(m.data.end(), row.begin(), row.end());
  }
  return m;
}

ojson completion_cost_to_json(const CompletionCost& f) {
  ojson j;
  if (f.is_quadratic()) {
    j["form"] = "quadratic";
    j["alpha"] = f.alpha();
  } else {
    j["form"] = "table";
    j["values"] = f.values();
  }
  return j;
}

CompletionCost completion_cost_from_json(const ojson& j) {
  check_keys(j, "completion_cost", {"form"}, {"alpha", "values"});
  const std::string form = j.at("form").get<std::string>();
  if (form == "quadratic") {
    check_keys(j, "completion_cost", {"form", "alpha"});
    return CompletionCost::quadratic(get_double(j, "alpha", "completion_cost"));
  }
  if (form == "table") {
    check_keys(j, "completion_cost", {"form", "values"});
    return CompletionCost::table(
        get_double_array(j.at("values"), "completion_cost.values"));
  }
  throw ParseError("completion_cost.form must be 'quadratic' or 'table'");
}

ojson matrix_to_json(const Matrix& m) {
  ojson rows = ojson::array();
  for (int r = 0; r < m.rows; ++r) {
    ojson row = ojson::array();
    for (int c = 0; c < m.cols; ++c) {
      row.push_back(m.at(r, c));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string line_column(const std::string& text, size_t byte) {
  size_t line = 1;
  size_t col = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

ojson parse_document(const std::string& text, const char* what) {
  try {
    return ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string(what) + " parse error at " +
                     line_column(text, e.byte > 0 ? e.byte - 1 : 0) + ": " +
                     e.what());
  }
}

}  // namespace

std::string instance_to_json(const Instance& instance) {
  ojson j;
  j["schema"] = kInstanceSchema;
  j["horizon"] = instance.horizon;
  j["slot_duration"] = instance.slot_duration;
  j["completion_cost"] = completion_cost_to_json(instance.completion_cost);
  ojson tasks = ojson::array();
  for (const TaskSpec& t : instance.tasks) {
    ojson jt;
    jt["processing_energy"] = t.processing_energy;
    jt["bs_comm_energy"] = t.bs_comm_energy;
    jt["deadline"] = t.deadline;
    jt["helper_proc_cost"] = t.helper_proc_cost;
    jt["server_proc_cost"] = t.server_proc_cost;
    jt["bs_comm_cost"] = t.bs_comm_cost;
    jt["server_comm_cost"] = t.server_comm_cost;
    tasks.push_back(std::move(jt));
  }
  j["tasks"] = std::move(tasks);
  j["helper_energy"] = instance.helper_energy;
  j["contact_rates"] = matrix_to_json(instance.contact_rates);
  if (instance.helper_proc_costs.has_value()) {
    j["helper_proc_costs"] = matrix_to_json(*instance.helper_proc_costs);
  }
  return j.dump(2) + "\n";
}

Instance instance_from_json(const std::string& text) {
  const ojson j = parse_document(text, "instance");
  check_keys(j, "instance",
             {"schema", "horizon", "slot_duration", "completion_cost", "tasks",
              "helper_energy", "contact_rates"},
             {"helper_proc_costs"});
  if (j.at("schema").get<std::string>() != kInstanceSchema) {
    throw ParseError("unsupported instance schema '" +
                     j.at("schema").get<std::string>() + "'");
  }

  Instance inst;
  inst.horizon = get_int(j, "horizon", "instance");
  inst.slot_duration = get_double(j, "slot_duration", "instance");
  inst.completion_cost = completion_cost_from_json(j.at("completion_cost"));

  const ojson& tasks = j.at("tasks");
  if (!tasks.is_array()) {
    throw ParseError("instance.tasks must be an array");
  }
  for (size_t i = 0; i < tasks.size(); ++i) {
    const std::string ctx = "tasks[" + std::to_string(i) + "]";
    const ojson& jt = tasks[i];
    check_keys(jt, ctx,
               {"processing_energy", "bs_comm_energy", "deadline",
                "helper_proc_cost", "server_proc_cost", "bs_comm_cost",
                "server_comm_cost"});
    TaskSpec t;
    t.processing_energy = get_double(jt, "processing_energy", ctx);
    t.bs_comm_energy = get_double(jt, "bs_comm_energy", ctx);
    t.deadline = get_int(jt, "deadline", ctx);
    t.helper_proc_cost = get_double(jt, "helper_proc_cost", ctx);
    t.server_proc_cost = get_double(jt, "server_proc_cost", ctx);
    t.bs_comm_cost = get_double(jt, "bs_comm_cost", ctx);
    t.server_comm_cost = get_double(jt, "server_comm_cost", ctx);
    inst.tasks.push_back(t);
  }

  inst.helper_energy = get_double_array(j.at("helper_energy"), "helper_energy");
  inst.contact_rates = get_matrix(j.at("contact_rates"), "contact_rates");
  if (j.contains("helper_proc_costs")) {
    inst.helper_proc_costs = get_matrix(j.at("helper_proc_costs"), "helper_proc_costs");
  }

  inst.validate();
  return inst;
}

void save_instance(const Instance& instance, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ParseError("cannot open '" + path.string() + "' for writing");
  }
  out << instance_to_json(instance);
  if (!out) {
    throw ParseError("failed writing instance to '" + path.string() + "'");
  }
}

Instance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open '" + path.string() + "' for reading");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return instance_from_json(buffer.str());
}

}  // namespace d2dto
