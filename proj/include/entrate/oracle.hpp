#pragma once

// Independent ground truth for the solvers: exhaustive grid search over rate
// vectors, exhaustive enumeration of integer cell vectors, and a seeded
// Monte-Carlo simulation of the generation window.

#include <cstdint>

#include "entrate/model.hpp"
#include "entrate/solver.hpp"

namespace entrate {

struct GridSpec {
  double step = 1e7;    // ebit/s between neighbouring grid rates
  double slack = 0.05;  // accepted |sum_j y_j - C|
};

void validate(const GridSpec& grid);

/// Half the largest yield gap between neighbouring grid rates, so every
/// budget inside the feasible window has a grid point within reach.
double default_grid_slack(const Scenario& scenario, double step);

enum class GridOutcome {
  found,
  infeasible,      // the scenario itself has no feasible point
  grid_too_coarse  // feasible, but no grid point lands within the slack
};

std::string to_string(GridOutcome outcome);

struct GridSearchResult {
  RateAllocation allocation;
  GridOutcome outcome = GridOutcome::infeasible;
  std::uint64_t candidates = 0;  // grid vectors that satisfied the slack
};

/// Best objective over the per-user grids eps_min + k*step (plus eps_max).
/// Requires N <= 3.
GridSearchResult brute_force_best(const Scenario& scenario, const GridSpec& grid);

/// Best integer cell vector by full enumeration, using the same pinning rule
/// and tie-breaking as solve_integer. Requires N <= 3 and C <= 60.
RateAllocation enumerate_integer_best(const Scenario& scenario,
                                      TieBreak tie_break = TieBreak::waterfill);

struct McReport {
  std::uint64_t trials = 0;
  std::int64_t pairs_per_window = 0;  // K = round(r tau)
  double empirical_mean = 0.0;
  double standard_error = 0.0;
  double analytic_discrete = 0.0;    // K * P_s1 * P_s2
  double analytic_continuous = 0.0;  // S_j with r tau in place of K
  double discretization_bias = 0.0;  // analytic_discrete - analytic_continuous

  /// |mean - K P_s1 P_s2| in standard errors; 0 when both differences vanish.
  double z_score() const;

  friend bool operator==(const McReport&, const McReport&) = default;
};

/// Simulates `trials` windows of K pairs; each pair survives the channel and
/// the memory by independent Bernoulli draws. Trial t draws from a stream
/// seeded by (seed, t), so the report does not depend on `threads`.
McReport monte_carlo_window(const UserProfile& user, double rate, const NodeConfig& node,
                            std::uint64_t trials, std::uint64_t seed, unsigned threads = 1);

}  // namespace entrate
