#pragma once

// Exact solvers for the weighted entanglement-rate allocation problem
//
//   max_r  sum_j w_j P_s1,j h(r_j tau)
//   s.t.   sum_j floor(h(r_j tau)) = C     (or <= C)
//          eps_min,j <= r_j <= eps_max,j
//
// Substituting y_j = h(r_j tau), which is strictly increasing, turns the
// continuous relaxation into a fractional knapsack: maximise sum c_j y_j with
// c_j = w_j P_s1,j, one budget row and box bounds on y. The integer variant
// fixes the per-user cell counts m_j = floor(y_j).

#include <cstdint>
#include <span>
#include <vector>

#include "entrate/model.hpp"

namespace entrate {

enum class TieBreak { waterfill, lexicographic };

std::string to_string(TieBreak tie_break);

struct SolverOptions {
  Relaxation relaxation = Relaxation::continuous;
  double tolerance = 1e-9;
  TieBreak tie_break = TieBreak::waterfill;
};

void validate(const SolverOptions& options);

/// Objective coefficient of y_j: w_j * P_s1,j.
double coefficient(const UserProfile& user, AttenuationMode mode);

/// Yield box [h(eps_min tau), h(eps_max tau)] for every user.
struct YieldBounds {
  std::vector<double> lower;
  std::vector<double> upper;
};

YieldBounds yield_bounds(const Scenario& scenario);

/// Continuous feasibility window: sum y_min <= C, and sum y_max >= C in
/// equality mode.
Feasibility check_feasibility(const Scenario& scenario);

/// Integer feasibility: sum floor(y_min) <= C, and sum floor(y_max) >= C in
/// equality mode.
Feasibility check_integer_feasibility(const Scenario& scenario);

/// Greedy fill in decreasing coefficient order; ties resolved by
/// options.tie_break. At most one coefficient group ends strictly between
/// its bounds.
RateAllocation solve_continuous(const Scenario& scenario, const SolverOptions& options = {});

/// Lagrangian cross-check: bisection on the budget multiplier, then the
/// marginal group is distributed to meet the budget exactly.
RateAllocation solve_dual(const Scenario& scenario, const SolverOptions& options = {});

/// Integer cell counts. Exact dynamic program over (user, cells left) on the
/// pinned objective sum_j c_j max(m_j, y_min,j).
RateAllocation solve_integer(const Scenario& scenario, const SolverOptions& options = {});

/// Dispatches on options.relaxation.
RateAllocation solve(const Scenario& scenario, const SolverOptions& options = {});

/// Integer cell bounds [floor(y_min), floor(y_max)] per user.
struct CellBounds {
  std::vector<std::int64_t> lower;
  std::vector<std::int64_t> upper;
};

CellBounds cell_bounds(const Scenario& scenario);

/// Builds the allocation for fixed cell counts. A user at floor(y_min) keeps
/// its minimum rate; everyone else is pinned to y_j = m_j, with the rate
/// nudged so that floor(h(r_j tau)) == m_j holds exactly.
RateAllocation materialize_cells(const Scenario& scenario, std::span<const std::int64_t> cells);

/// Builds the allocation for continuous target yields (clamped to bounds).
RateAllocation materialize_yields(const Scenario& scenario, std::span<const double> yields);

}  // namespace entrate
