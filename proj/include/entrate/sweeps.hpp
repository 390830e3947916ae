#pragma once

// One-dimensional parameter sweeps over a base scenario, with CSV and SVG
// output.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "entrate/model.hpp"
#include "entrate/solver.hpp"
#include "json.hpp"

namespace entrate {

inline constexpr std::string_view kToolVersion = "entrate 0.1.0";

enum class SweepAxis { eps_min_of_user, tau, num_users, distance_of_user, memory_capacity };
enum class ChartKind { rates, objective };

std::string to_string(SweepAxis axis);
std::string axis_unit(SweepAxis axis);

struct SweepRange {
  double start = 0.0;
  double stop = 0.0;
  double step = 1.0;
};

/// Averaging over random user distances (uniform per user and run).
struct RandomizedRuns {
  std::uint64_t runs = 1000;
  double distance_min_km = 0.5;
  double distance_max_km = 5.0;
};

struct SweepSpec {
  std::string name;
  Scenario base;
  SweepAxis axis = SweepAxis::memory_capacity;
  std::size_t user_index = 0;  // for the *_of_user axes
  SweepRange range;
  std::optional<RandomizedRuns> randomized;
  std::optional<UserProfile> extra_user;  // template for num_users beyond the base list
  std::uint64_t seed = 0;
  SolverOptions options;
  ChartKind chart = ChartKind::rates;
};

void validate(const SweepSpec& spec);

SweepSpec parse_sweep_spec(std::string_view text);
SweepSpec load_sweep_spec_file(const std::string& file);
nlohmann::json to_json(const SweepSpec& spec);

/// start, start + step, ..., up to stop (inclusive within 1e-9 steps).
std::vector<double> axis_values(const SweepRange& range);

/// Scenario at one axis value; validation happens in the caller.
Scenario scenario_at(const SweepSpec& spec, double axis_value);

enum class RowStatus { optimal, partial, infeasible, invalid };

std::string to_string(RowStatus status);

struct SweepRow {
  double axis_value = 0.0;
  RowStatus status = RowStatus::infeasible;
  std::vector<double> rates;
  std::vector<double> yields;
  std::vector<double> memory_cells;  // integral unless averaged
  double objective = 0.0;
  std::size_t users = 0;
  std::uint64_t runs = 1;
  std::uint64_t feasible_runs = 0;
  std::string message;  // reason for an invalid point

  bool has_values() const { return status == RowStatus::optimal || status == RowStatus::partial; }
};

struct RawRow {
  double axis_value = 0.0;
  std::uint64_t run = 0;
  std::vector<double> distances_km;
  RateAllocation allocation;
};

struct SweepResult {
  SweepSpec spec;
  std::vector<SweepRow> rows;  // axis order
  std::vector<RawRow> raw;     // randomized sweeps only: (axis, run) order
  nlohmann::json metadata;
};

/// One solve (or one batch of randomized runs) per axis value. Points are
/// distributed over `threads` workers (0 = hardware concurrency); output is
/// identical for any thread count.
SweepResult run_sweep(const SweepSpec& spec, unsigned threads = 0);

/// Header `axis,user_index,rate_ebit_s,yield,memory_cells,objective,status`,
/// one line per (axis value, user), LF endings, %.9g numbers.
void write_csv(const SweepResult& result, std::ostream& out);
void write_csv(const SweepResult& result, const std::string& file);

/// Per-run rows of a randomized sweep.
void write_raw_csv(const SweepResult& result, std::ostream& out);
void write_raw_csv(const SweepResult& result, const std::string& file);

/// Thrown when a chart cannot be drawn (fewer than two points with values).
class ChartError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void render_svg(const SweepResult& result, std::ostream& out);
void render_svg(const SweepResult& result, const std::string& file);

/// "%.9g" in the C locale.
std::string format_number(double value);

}  // namespace entrate
