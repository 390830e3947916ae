#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "entrate/scenario_io.hpp"
#include "entrate/seeding.hpp"
#include "entrate/sweeps.hpp"

namespace entrate {

using namespace json_fields;

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::eps_min_of_user:
      return "eps_min_of_user";
    case SweepAxis::tau:
      return "tau";
    case SweepAxis::num_users:
      return "num_users";
    case SweepAxis::distance_of_user:
      return "distance_of_user";
    case SweepAxis::memory_capacity:
      return "memory_capacity";
  }
  return "unknown";
}

std::string axis_unit(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::eps_min_of_user:
      return "ebit/s";
    case SweepAxis::tau:
      return "s";
    case SweepAxis::num_users:
      return "users";
    case SweepAxis::distance_of_user:
      return "km";
    case SweepAxis::memory_capacity:
      return "qubits";
  }
  return "";
}

std::string to_string(RowStatus status) {
  switch (status) {
    case RowStatus::optimal:
      return "optimal";
    case RowStatus::partial:
      return "partial";
    case RowStatus::infeasible:
      return "infeasible";
    case RowStatus::invalid:
      return "invalid";
  }
  return "unknown";
}

namespace {

bool is_user_axis(SweepAxis axis) {
  return axis == SweepAxis::eps_min_of_user || axis == SweepAxis::distance_of_user;
}

bool is_integral_axis(SweepAxis axis) {
  return axis == SweepAxis::num_users || axis == SweepAxis::memory_capacity;
}

SweepAxis axis_from(const std::string& s, const std::string& path) {
  for (SweepAxis a : {SweepAxis::eps_min_of_user, SweepAxis::tau, SweepAxis::num_users,
                      SweepAxis::distance_of_user, SweepAxis::memory_capacity}) {
    if (to_string(a) == s) return a;
  }
  throw ParseError(path +
                   ": expected one of eps_min_of_user, tau, num_users, distance_of_user, "
                   "memory_capacity");
}

template <typename F>
void as_parse_error(F&& check) {
  try {
    check();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

}  // namespace

std::vector<double> axis_values(const SweepRange& range) {
  const double span = (range.stop - range.start) / range.step;
  const auto count = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
  std::vector<double> values;
  values.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    values.push_back(range.start + static_cast<double>(i) * range.step);
  }
  return values;
}

void validate(const SweepSpec& spec) {
  validate(spec.base);
  validate(spec.options);
  const SweepRange& r = spec.range;
  if (!std::isfinite(r.start) || !std::isfinite(r.stop)) {
    throw std::invalid_argument("range: start and stop must be finite");
  }
  if (!(r.step > 0.0) || !std::isfinite(r.step)) {
    throw std::invalid_argument("range.step: must be > 0");
  }
  if (r.start > r.stop) throw std::invalid_argument("range.start: must be <= range.stop");
  if (is_user_axis(spec.axis) && spec.user_index >= spec.base.size()) {
    throw std::invalid_argument("user_index: must be < the number of base users");
  }
  if (is_integral_axis(spec.axis)) {
    for (double v : {r.start, r.step}) {
      if (std::floor(v) != v) {
        throw std::invalid_argument("range: " + to_string(spec.axis) + " needs integer values");
      }
    }
    if (r.start < 1.0) throw std::invalid_argument("range.start: must be >= 1");
  }
  if (spec.axis == SweepAxis::num_users && !spec.extra_user &&
      axis_values(r).back() > static_cast<double>(spec.base.size())) {
    throw std::invalid_argument("extra_user: required when num_users exceeds the base users");
  }
  if (spec.extra_user) validate(*spec.extra_user, "extra_user");
  if (spec.randomized) {
    const RandomizedRuns& rr = *spec.randomized;
    if (rr.runs < 1) throw std::invalid_argument("randomized.runs: must be >= 1");
    if (!(rr.distance_min_km >= 0.0) || !(rr.distance_max_km >= rr.distance_min_km)) {
      throw std::invalid_argument(
          "randomized: need 0 <= distance_min_km <= distance_max_km");
    }
    if (spec.axis == SweepAxis::distance_of_user) {
      throw std::invalid_argument("randomized: cannot be combined with the distance_of_user axis");
    }
  }
}

SweepSpec parse_sweep_spec(std::string_view body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body.begin(), body.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("document: malformed JSON: ") + e.what());
  }
  reject_unknown(doc,
                 {"name", "base", "axis", "user_index", "range", "randomized", "extra_user",
                  "seed", "solver", "chart"},
                 "");
  SweepSpec spec;
  if (doc.contains("name")) spec.name = text(doc["name"], "name");
  spec.base = scenario_from_json(require(doc, "base", ""), "base");
  spec.axis = axis_from(text(require(doc, "axis", ""), "axis"), "axis");
  if (doc.contains("user_index")) {
    const std::int64_t k = integer(doc["user_index"], "user_index");
    if (k < 0) throw ParseError("user_index: must be >= 0");
    spec.user_index = static_cast<std::size_t>(k);
  } else if (is_user_axis(spec.axis)) {
    throw ParseError("user_index: missing required field");
  }

  const nlohmann::json& range = require(doc, "range", "");
  reject_unknown(range, {"start", "stop", "step"}, "range");
  spec.range.start = number(require(range, "start", "range"), "range.start");
  spec.range.stop = number(require(range, "stop", "range"), "range.stop");
  spec.range.step = number(require(range, "step", "range"), "range.step");

  if (doc.contains("randomized")) {
    const nlohmann::json& r = doc["randomized"];
    reject_unknown(r, {"runs", "distance_min_km", "distance_max_km"}, "randomized");
    RandomizedRuns rr;
    if (r.contains("runs")) {
      const std::int64_t runs = integer(r["runs"], "randomized.runs");
      if (runs < 1) throw ParseError("randomized.runs: must be >= 1");
      rr.runs = static_cast<std::uint64_t>(runs);
    }
    if (r.contains("distance_min_km")) {
      rr.distance_min_km = number(r["distance_min_km"], "randomized.distance_min_km");
    }
    if (r.contains("distance_max_km")) {
      rr.distance_max_km = number(r["distance_max_km"], "randomized.distance_max_km");
    }
    spec.randomized = rr;
  }
  if (doc.contains("extra_user")) spec.extra_user = user_from_json(doc["extra_user"], "extra_user");
  if (doc.contains("seed")) {
    const std::int64_t seed = integer(doc["seed"], "seed");
    if (seed < 0) throw ParseError("seed: must be >= 0");
    spec.seed = static_cast<std::uint64_t>(seed);
  }
  if (doc.contains("solver")) {
    const nlohmann::json& s = doc["solver"];
    reject_unknown(s, {"relaxation", "tolerance", "tie_break"}, "solver");
    if (s.contains("relaxation")) {
      const std::string v = text(s["relaxation"], "solver.relaxation");
      if (v == "continuous") {
        spec.options.relaxation = Relaxation::continuous;
      } else if (v == "integer") {
        spec.options.relaxation = Relaxation::integer;
      } else {
        throw ParseError("solver.relaxation: expected \"continuous\" or \"integer\"");
      }
    }
    if (s.contains("tolerance")) spec.options.tolerance = number(s["tolerance"], "solver.tolerance");
    if (s.contains("tie_break")) {
      const std::string v = text(s["tie_break"], "solver.tie_break");
      if (v == "waterfill") {
        spec.options.tie_break = TieBreak::waterfill;
      } else if (v == "lexicographic") {
        spec.options.tie_break = TieBreak::lexicographic;
      } else {
        throw ParseError("solver.tie_break: expected \"waterfill\" or \"lexicographic\"");
      }
    }
  }
  if (doc.contains("chart")) {
    const std::string v = text(doc["chart"], "chart");
    if (v == "rates") {
      spec.chart = ChartKind::rates;
    } else if (v == "objective") {
      spec.chart = ChartKind::objective;
    } else {
      throw ParseError("chart: expected \"rates\" or \"objective\"");
    }
  }
  as_parse_error([&] { validate(spec); });
  return spec;
}

SweepSpec load_sweep_spec_file(const std::string& file) {
  const std::string body = read_text_file(file);
  try {
    return parse_sweep_spec(body);
  } catch (const ParseError& e) {
    throw ParseError(file + ": " + e.what());
  }
}

nlohmann::json to_json(const SweepSpec& spec) {
  nlohmann::json doc = {
      {"name", spec.name},
      {"base", to_json(spec.base)},
      {"axis", to_string(spec.axis)},
      {"range", {{"start", spec.range.start}, {"stop", spec.range.stop}, {"step", spec.range.step}}},
      {"seed", spec.seed},
      {"solver",
       {{"relaxation", to_string(spec.options.relaxation)},
        {"tolerance", spec.options.tolerance},
        {"tie_break", to_string(spec.options.tie_break)}}},
      {"chart", spec.chart == ChartKind::rates ? "rates" : "objective"}};
  if (is_user_axis(spec.axis)) doc["user_index"] = spec.user_index;
  if (spec.randomized) {
    doc["randomized"] = {{"runs", spec.randomized->runs},
                         {"distance_min_km", spec.randomized->distance_min_km},
                         {"distance_max_km", spec.randomized->distance_max_km}};
  }
  if (spec.extra_user) doc["extra_user"] = to_json(*spec.extra_user);
  return doc;
}

Scenario scenario_at(const SweepSpec& spec, double axis_value) {
  Scenario s = spec.base;
  switch (spec.axis) {
    case SweepAxis::eps_min_of_user:
      s.users.at(spec.user_index).rate_min = axis_value;
      break;
    case SweepAxis::tau:
      // tau = alpha / r_dec with r_dec held fixed.
      s.node.alpha = axis_value * s.node.decoherence_rate;
      break;
    case SweepAxis::num_users: {
      const auto n = static_cast<std::size_t>(std::llround(axis_value));
      if (n <= s.users.size()) {
        s.users.resize(n);
      } else {
        s.users.resize(n, spec.extra_user.value_or(UserProfile{}));
      }
      break;
    }
    case SweepAxis::distance_of_user:
      s.users.at(spec.user_index).distance_km = axis_value;
      break;
    case SweepAxis::memory_capacity:
      s.node.memory_capacity = std::llround(axis_value);
      break;
  }
  return s;
}

namespace {

struct PointResult {
  SweepRow row;
  std::vector<RawRow> raw;
};

void fill_from_allocation(SweepRow& row, const RateAllocation& alloc) {
  row.rates = alloc.rates;
  row.yields = alloc.yields;
  row.memory_cells.assign(alloc.memory_cells.begin(), alloc.memory_cells.end());
  row.objective = alloc.objective;
}

PointResult run_point(const SweepSpec& spec, double axis_value) {
  PointResult point;
  SweepRow& row = point.row;
  row.axis_value = axis_value;
  const Scenario scenario = scenario_at(spec, axis_value);
  row.users = scenario.size();
  try {
    validate(scenario);
  } catch (const std::invalid_argument& e) {
    row.status = RowStatus::invalid;
    row.message = e.what();
    return point;
  }

  if (!spec.randomized) {
    const RateAllocation alloc = solve(scenario, spec.options);
    row.feasible_runs = alloc.optimal() ? 1 : 0;
    row.status = alloc.optimal() ? RowStatus::optimal : RowStatus::infeasible;
    if (alloc.optimal()) fill_from_allocation(row, alloc);
    return point;
  }

  const RandomizedRuns& rr = *spec.randomized;
  const std::size_t n = scenario.size();
  row.runs = rr.runs;
  row.rates.assign(n, 0.0);
  row.yields.assign(n, 0.0);
  row.memory_cells.assign(n, 0.0);
  for (std::uint64_t run = 0; run < rr.runs; ++run) {
    Scenario drawn = scenario;
    RawRow raw;
    raw.axis_value = axis_value;
    raw.run = run;
    for (std::size_t j = 0; j < n; ++j) {
      // Keyed on (run, user) only, so user j sees the same distance at every axis value.
      const double u = unit_interval(derive_seed(spec.seed, {run, j}));
      drawn.users[j].distance_km =
          rr.distance_min_km + (rr.distance_max_km - rr.distance_min_km) * u;
      raw.distances_km.push_back(drawn.users[j].distance_km);
    }
    raw.allocation = solve(drawn, spec.options);
    if (raw.allocation.optimal()) {
      ++row.feasible_runs;
      for (std::size_t j = 0; j < n; ++j) {
        row.rates[j] += raw.allocation.rates[j];
        row.yields[j] += raw.allocation.yields[j];
        row.memory_cells[j] += static_cast<double>(raw.allocation.memory_cells[j]);
      }
      row.objective += raw.allocation.objective;
    }
    point.raw.push_back(std::move(raw));
  }
  if (row.feasible_runs == 0) {
    row.status = RowStatus::infeasible;
    row.rates.clear();
    row.yields.clear();
    row.memory_cells.clear();
    row.objective = 0.0;
    return point;
  }
  const auto k = static_cast<double>(row.feasible_runs);
  for (std::size_t j = 0; j < n; ++j) {
    row.rates[j] /= k;
    row.yields[j] /= k;
    row.memory_cells[j] /= k;
  }
  row.objective /= k;
  row.status = row.feasible_runs == rr.runs ? RowStatus::optimal : RowStatus::partial;
  return point;
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec, unsigned threads) {
  validate(spec);
  const std::vector<double> values = axis_values(spec.range);
  std::vector<PointResult> points(values.size());

  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, values.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < values.size(); i = next++) {
      try {
        points[i] = run_point(spec, values[i]);
      } catch (const std::exception& e) {
        // Recorded on the row; the rest of the sweep carries on.
        PointResult failed;
        failed.row.axis_value = values[i];
        failed.row.status = RowStatus::invalid;
        failed.row.users = scenario_at(spec, values[i]).size();
        failed.row.message = e.what();
        points[i] = std::move(failed);
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  SweepResult result;
  result.spec = spec;
  for (PointResult& p : points) {
    result.rows.push_back(std::move(p.row));
    for (RawRow& r : p.raw) result.raw.push_back(std::move(r));
  }
  result.metadata = {{"tool", std::string(kToolVersion)}, {"spec", to_json(spec)}};
  return result;
}

}  // namespace entrate
