// entrate: command-line front end for the rate-allocation solvers.
//
//   entrate solve <scenario> [--integer] [--json]
//   entrate sweep <spec> --csv <path> [--svg <path>] [--raw] [--meta <path>]
//   entrate oracle-check <scenario> [--grid-step <ebit/s>]
//   entrate mc-validate <scenario> --trials <n> --seed <s>
//
// Exit codes: 0 success, 1 usage/parse error, 2 infeasible scenario,
// 3 validation mismatch.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "entrate/model.hpp"
#include "entrate/oracle.hpp"
#include "entrate/scenario_io.hpp"
#include "entrate/solver.hpp"
#include "entrate/sweeps.hpp"
#include "json.hpp"

namespace {

using namespace entrate;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kInfeasible = 2;
constexpr int kMismatch = 3;

nlohmann::json allocation_json(const Scenario& scenario, const RateAllocation& a) {
  const MemoryUsage usage = a.optimal() ? memory_usage(scenario, a.rates) : MemoryUsage{};
  return {{"status", to_string(a.status)},
          {"feasibility", to_string(a.feasibility)},
          {"relaxation", to_string(a.relaxation)},
          {"tau_s", scenario.tau()},
          {"objective", a.objective},
          {"rates_ebit_s", a.rates},
          {"yields", a.yields},
          {"memory_cells", a.memory_cells},
          {"memory_used", usage.continuous},
          {"memory_cells_used", usage.integer},
          {"memory_capacity", scenario.node.memory_capacity}};
}

void print_allocation(const Scenario& scenario, const RateAllocation& a) {
  std::cout << "status      " << to_string(a.status) << " (" << to_string(a.relaxation) << ", "
            << to_string(a.feasibility) << ")\n"
            << "tau_s       " << format_number(scenario.tau()) << "\n";
  if (!a.optimal()) return;
  const MemoryUsage usage = memory_usage(scenario, a.rates);
  std::cout << "objective   " << format_number(a.objective) << "\n"
            << "memory      " << format_number(usage.continuous) << " continuous, "
            << usage.integer << " cells of " << scenario.node.memory_capacity << "\n\n"
            << "user  rate_ebit_s      yield            memory_cells\n";
  for (std::size_t j = 0; j < a.rates.size(); ++j) {
    std::printf("%-5zu %-16s %-16s %lld\n", j, format_number(a.rates[j]).c_str(),
                format_number(a.yields[j]).c_str(), static_cast<long long>(a.memory_cells[j]));
  }
}

int run_solve(const std::string& file, bool integer, bool as_json, const std::string& tie_break) {
  const Scenario scenario = load_scenario_file(file);
  SolverOptions options;
  options.relaxation = integer ? Relaxation::integer : Relaxation::continuous;
  options.tie_break = tie_break == "lexicographic" ? TieBreak::lexicographic : TieBreak::waterfill;
  const RateAllocation a = solve(scenario, options);
  if (as_json) {
    std::cout << allocation_json(scenario, a).dump(2) << "\n";
  } else {
    print_allocation(scenario, a);
  }
  return a.optimal() ? kOk : kInfeasible;
}

std::string raw_path_for(const std::string& csv) {
  std::filesystem::path p(csv);
  p.replace_extension(".raw.csv");
  return p.string();
}

int run_sweep_command(const std::string& file, const std::string& csv, const std::string& svg,
                      bool raw, const std::string& meta, unsigned threads) {
  const SweepSpec spec = load_sweep_spec_file(file);
  const SweepResult result = run_sweep(spec, threads);
  write_csv(result, csv);
  if (raw) {
    if (!spec.randomized) {
      std::cerr << "note: --raw has no per-run rows for a non-randomized sweep\n";
    }
    write_raw_csv(result, raw_path_for(csv));
  }
  if (!meta.empty()) {
    std::ofstream out(meta, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(meta + ": cannot open for writing");
    out << result.metadata.dump(2) << "\n";
  }

  std::size_t feasible = 0;
  for (const SweepRow& r : result.rows) feasible += r.has_values() ? 1 : 0;
  std::cout << (spec.name.empty() ? file : spec.name) << ": " << result.rows.size()
            << " points, " << feasible << " feasible -> " << csv << "\n";

  if (!svg.empty()) {
    try {
      render_svg(result, svg);
    } catch (const ChartError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kUsage;
    }
  }
  return kOk;
}

bool close_relative(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1e-300, std::abs(a), std::abs(b)});
}

int run_oracle_check(const std::string& file, double grid_step, double slack) {
  const Scenario scenario = load_scenario_file(file);
  const RateAllocation greedy = solve_continuous(scenario);
  bool ok = true;

  if (!greedy.optimal()) {
    std::cout << "solver: infeasible (" << to_string(greedy.feasibility) << ")\n";
    if (scenario.size() <= 3) {
      GridSpec grid{grid_step, slack > 0 ? slack : default_grid_slack(scenario, grid_step)};
      const GridSearchResult brute = brute_force_best(scenario, grid);
      std::cout << "grid oracle: " << to_string(brute.outcome) << "\n";
    }
    return kInfeasible;
  }

  const RateAllocation dual = solve_dual(scenario);
  const bool dual_ok = dual.optimal() && close_relative(greedy.objective, dual.objective, 1e-9);
  std::cout << "greedy objective " << format_number(greedy.objective) << "\n"
            << "dual objective   " << format_number(dual.objective) << (dual_ok ? "  ok" : "  MISMATCH")
            << "\n";
  ok = ok && dual_ok;

  if (scenario.size() <= 3) {
    GridSpec grid{grid_step, slack > 0 ? slack : default_grid_slack(scenario, grid_step)};
    const GridSearchResult brute = brute_force_best(scenario, grid);
    if (brute.outcome == GridOutcome::found) {
      const bool grid_ok = close_relative(greedy.objective, brute.allocation.objective, 1e-3);
      std::cout << "grid objective   " << format_number(brute.allocation.objective) << " ("
                << brute.candidates << " candidates, step " << format_number(grid.step)
                << ", slack " << format_number(grid.slack) << ")" << (grid_ok ? "  ok" : "  MISMATCH")
                << "\n";
      ok = ok && grid_ok;
    } else {
      std::cout << "grid oracle: " << to_string(brute.outcome) << "  MISMATCH\n";
      ok = false;
    }
  } else {
    std::cout << "grid oracle skipped (more than 3 users)\n";
  }

  if (scenario.size() <= 3 && scenario.node.memory_capacity <= 60) {
    SolverOptions integer;
    integer.relaxation = Relaxation::integer;
    const RateAllocation dp = solve_integer(scenario, integer);
    const RateAllocation enumerated = enumerate_integer_best(scenario);
    const bool int_ok = dp.status == enumerated.status &&
                        (!dp.optimal() || dp.memory_cells == enumerated.memory_cells);
    std::cout << "integer solver   " << to_string(dp.status);
    if (dp.optimal()) std::cout << " objective " << format_number(dp.objective);
    std::cout << (int_ok ? "  ok" : "  MISMATCH") << "\n";
    ok = ok && int_ok;
  } else {
    std::cout << "integer enumeration skipped (needs N <= 3 and C <= 60)\n";
  }
  return ok ? kOk : kMismatch;
}

int run_mc_validate(const std::string& file, std::uint64_t trials, std::uint64_t seed,
                    unsigned threads) {
  const Scenario scenario = load_scenario_file(file);
  const RateAllocation a = solve_continuous(scenario);
  if (!a.optimal()) {
    std::cout << "solver: infeasible (" << to_string(a.feasibility) << ")\n";
    return kInfeasible;
  }
  constexpr double kMaxZ = 3.5;
  bool ok = true;
  std::cout << "user  K    mean          stderr        K*Ps1*Ps2     S_j(r tau)    z\n";
  for (std::size_t j = 0; j < scenario.size(); ++j) {
    const McReport r =
        monte_carlo_window(scenario.users[j], a.rates[j], scenario.node, trials, seed, threads);
    const double z = r.z_score();
    ok = ok && z <= kMaxZ;
    std::printf("%-5zu %-4lld %-13s %-13s %-13s %-13s %s%s\n", j,
                static_cast<long long>(r.pairs_per_window), format_number(r.empirical_mean).c_str(),
                format_number(r.standard_error).c_str(), format_number(r.analytic_discrete).c_str(),
                format_number(r.analytic_continuous).c_str(), format_number(z).c_str(),
                z <= kMaxZ ? "" : "  MISMATCH");
  }
  return ok ? kOk : kMismatch;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entanglement-rate allocation for a shared quantum memory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(entrate::kToolVersion));

  std::string scenario_file;
  bool integer = false;
  bool as_json = false;
  std::string tie_break = "waterfill";
  auto* solve_cmd = app.add_subcommand("solve", "Solve one scenario");
  solve_cmd->add_option("scenario", scenario_file, "Scenario JSON file")->required();
  solve_cmd->add_flag("--integer", integer, "Enforce integer memory cells");
  solve_cmd->add_flag("--json", as_json, "Machine-readable output");
  solve_cmd->add_option("--tie-break", tie_break, "waterfill or lexicographic")
      ->check(CLI::IsMember({"waterfill", "lexicographic"}));

  std::string spec_file, csv, svg, meta;
  bool raw = false;
  unsigned threads = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter sweep");
  sweep_cmd->add_option("spec", spec_file, "Sweep spec JSON file")->required();
  sweep_cmd->add_option("--csv", csv, "CSV output path")->required();
  sweep_cmd->add_option("--svg", svg, "SVG chart output path");
  sweep_cmd->add_flag("--raw", raw, "Also write per-run rows to <csv stem>.raw.csv");
  sweep_cmd->add_option("--meta", meta, "Write resolved spec and tool version as JSON");
  sweep_cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");

  double grid_step = 1e7;
  double slack = 0.0;
  auto* oracle_cmd = app.add_subcommand("oracle-check", "Compare solvers with the oracles");
  oracle_cmd->add_option("scenario", scenario_file, "Scenario JSON file")->required();
  oracle_cmd->add_option("--grid-step", grid_step, "Grid step in ebit/s")
      ->check(CLI::PositiveNumber);
  oracle_cmd->add_option("--slack", slack, "Memory slack for grid points (default: half a step)");

  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  unsigned mc_threads = 1;
  auto* mc_cmd = app.add_subcommand("mc-validate", "Monte-Carlo check of the success model");
  mc_cmd->add_option("scenario", scenario_file, "Scenario JSON file")->required();
  mc_cmd->add_option("--trials", trials, "Number of windows")->required()->check(CLI::PositiveNumber);
  mc_cmd->add_option("--seed", seed, "PRNG seed")->required();
  mc_cmd->add_option("--threads", mc_threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*solve_cmd) return run_solve(scenario_file, integer, as_json, tie_break);
    if (*sweep_cmd) return run_sweep_command(spec_file, csv, svg, raw, meta, threads);
    if (*oracle_cmd) return run_oracle_check(scenario_file, grid_step, slack);
    if (*mc_cmd) return run_mc_validate(scenario_file, trials, seed, mc_threads);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
