#include "entrate/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace entrate {

std::string to_string(TieBreak tie_break) {
  return tie_break == TieBreak::waterfill ? "waterfill" : "lexicographic";
}

void validate(const SolverOptions& options) {
  if (!(options.tolerance > 0.0) || !std::isfinite(options.tolerance)) {
    throw std::invalid_argument("solver.tolerance: must be > 0");
  }
}

double coefficient(const UserProfile& user, AttenuationMode mode) {
  return user.weight * channel_success_prob(user, mode);
}

YieldBounds yield_bounds(const Scenario& scenario) {
  const double tau = scenario.tau();
  YieldBounds bounds;
  bounds.lower.reserve(scenario.size());
  bounds.upper.reserve(scenario.size());
  for (const UserProfile& user : scenario.users) {
    bounds.lower.push_back(pair_yield(user.rate_min * tau));
    bounds.upper.push_back(pair_yield(user.rate_max * tau));
  }
  return bounds;
}

CellBounds cell_bounds(const Scenario& scenario) {
  const YieldBounds yb = yield_bounds(scenario);
  CellBounds cells;
  for (std::size_t j = 0; j < scenario.size(); ++j) {
    cells.lower.push_back(static_cast<std::int64_t>(std::floor(yb.lower[j])));
    cells.upper.push_back(static_cast<std::int64_t>(std::floor(yb.upper[j])));
  }
  return cells;
}

Feasibility check_feasibility(const Scenario& scenario) {
  const YieldBounds yb = yield_bounds(scenario);
  const double capacity = static_cast<double>(scenario.node.memory_capacity);
  const double lo = std::accumulate(yb.lower.begin(), yb.lower.end(), 0.0);
  const double hi = std::accumulate(yb.upper.begin(), yb.upper.end(), 0.0);
  if (lo > capacity) return Feasibility::infeasible_high;
  if (scenario.node.constraint_mode == ConstraintMode::equality && hi < capacity) {
    return Feasibility::infeasible_low;
  }
  return Feasibility::feasible;
}

Feasibility check_integer_feasibility(const Scenario& scenario) {
  const CellBounds cb = cell_bounds(scenario);
  const std::int64_t capacity = scenario.node.memory_capacity;
  const std::int64_t lo = std::accumulate(cb.lower.begin(), cb.lower.end(), std::int64_t{0});
  const std::int64_t hi = std::accumulate(cb.upper.begin(), cb.upper.end(), std::int64_t{0});
  if (lo > capacity) return Feasibility::infeasible_high;
  if (scenario.node.constraint_mode == ConstraintMode::equality && hi < capacity) {
    return Feasibility::infeasible_low;
  }
  return Feasibility::feasible;
}

namespace {

RateAllocation infeasible(Feasibility why, Relaxation relaxation) {
  RateAllocation out;
  out.status = AllocationStatus::infeasible;
  out.feasibility = why;
  out.relaxation = relaxation;
  return out;
}

std::vector<double> coefficients(const Scenario& scenario) {
  std::vector<double> c;
  c.reserve(scenario.size());
  for (const UserProfile& user : scenario.users) {
    c.push_back(coefficient(user, scenario.node.attenuation_mode));
  }
  return c;
}

double continuous_budget(const Scenario& scenario, const YieldBounds& yb) {
  const double capacity = static_cast<double>(scenario.node.memory_capacity);
  if (scenario.node.constraint_mode == ConstraintMode::equality) return capacity;
  // The objective is increasing in every y_j, so "<= C" binds unless the
  // upper bounds cannot reach C.
  return std::min(capacity, std::accumulate(yb.upper.begin(), yb.upper.end(), 0.0));
}

// Max-min split of `target` among `members`: y_i = clamp(L, lo_i, hi_i) with
// sum y_i = target, solved exactly on the piecewise-linear breakpoints.
void waterfill_exact(std::span<const std::size_t> members, const YieldBounds& yb,
                     double target, std::vector<double>& y) {
  std::vector<double> breaks;
  for (std::size_t i : members) {
    breaks.push_back(yb.lower[i]);
    breaks.push_back(yb.upper[i]);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  auto filled = [&](double level) {
    double sum = 0.0;
    for (std::size_t i : members) sum += std::clamp(level, yb.lower[i], yb.upper[i]);
    return sum;
  };

  double level = breaks.front();
  for (std::size_t k = 1; k < breaks.size(); ++k) {
    const double at_break = filled(breaks[k]);
    if (at_break == target) {
      level = breaks[k];
      break;
    }
    if (at_break > target) {
      // Inside (breaks[k-1], breaks[k]): users whose interval covers the
      // segment move with the level, the rest sit on a bound.
      double fixed = 0.0;
      std::size_t free_count = 0;
      for (std::size_t i : members) {
        if (yb.upper[i] <= breaks[k - 1]) {
          fixed += yb.upper[i];
        } else if (yb.lower[i] >= breaks[k]) {
          fixed += yb.lower[i];
        } else {
          ++free_count;
        }
      }
      level = std::clamp((target - fixed) / static_cast<double>(free_count), breaks[k - 1],
                         breaks[k]);
      break;
    }
    level = breaks[k];
  }
  for (std::size_t i : members) y[i] = std::clamp(level, yb.lower[i], yb.upper[i]);
}

// Scenario-order fill of `target` among `members`.
void fill_in_order(std::span<const std::size_t> members, const YieldBounds& yb, double target,
                   std::vector<double>& y) {
  double remaining = target;
  for (std::size_t i : members) remaining -= yb.lower[i];
  for (std::size_t i : members) {
    const double room = yb.upper[i] - yb.lower[i];
    const double take = std::clamp(remaining, 0.0, room);
    y[i] = take == room ? yb.upper[i] : yb.lower[i] + take;
    remaining -= take;
  }
}

void check_budget(const RateAllocation& out, double budget, double tolerance) {
  const double used = std::accumulate(out.yields.begin(), out.yields.end(), 0.0);
  if (std::abs(used - budget) > tolerance * std::max(1.0, budget)) {
    throw std::logic_error("solver: memory budget residual " + std::to_string(used - budget) +
                           " exceeds tolerance");
  }
}

}  // namespace

RateAllocation materialize_yields(const Scenario& scenario, std::span<const double> yields) {
  if (yields.size() != scenario.size()) {
    throw std::invalid_argument("yields: length does not match the number of users");
  }
  const double tau = scenario.tau();
  const YieldBounds yb = yield_bounds(scenario);
  RateAllocation out;
  out.status = AllocationStatus::optimal;
  out.relaxation = Relaxation::continuous;
  for (std::size_t j = 0; j < scenario.size(); ++j) {
    const UserProfile& user = scenario.users[j];
    double rate;
    if (yields[j] <= yb.lower[j]) {
      rate = user.rate_min;
    } else if (yields[j] >= yb.upper[j]) {
      rate = user.rate_max;
    } else {
      rate = std::clamp(pair_yield_inverse(yields[j]) / tau, user.rate_min, user.rate_max);
    }
    const double y = pair_yield(rate * tau);
    out.rates.push_back(rate);
    out.yields.push_back(y);
    out.memory_cells.push_back(static_cast<std::int64_t>(std::floor(y)));
  }
  out.objective = objective(scenario, out.rates);
  return out;
}

RateAllocation materialize_cells(const Scenario& scenario, std::span<const std::int64_t> cells) {
  if (cells.size() != scenario.size()) {
    throw std::invalid_argument("cells: length does not match the number of users");
  }
  const double tau = scenario.tau();
  const YieldBounds yb = yield_bounds(scenario);
  const CellBounds cb = cell_bounds(scenario);
  RateAllocation out;
  out.status = AllocationStatus::optimal;
  out.relaxation = Relaxation::integer;
  for (std::size_t j = 0; j < scenario.size(); ++j) {
    const UserProfile& user = scenario.users[j];
    const std::int64_t m = cells[j];
    if (m < cb.lower[j] || m > cb.upper[j]) {
      throw std::invalid_argument("cells[" + std::to_string(j) + "]: outside the user's bounds");
    }
    double rate;
    const double target = static_cast<double>(m);
    if (m == cb.lower[j]) {
      // floor(y_min) == m already; the minimum rate is the pinned point.
      rate = user.rate_min;
    } else if (target >= yb.upper[j]) {
      rate = user.rate_max;
    } else {
      rate = pair_yield_inverse(target) / tau;
      while (pair_yield(rate * tau) < target) {
        rate = std::nextafter(rate, std::numeric_limits<double>::infinity());
      }
      rate = std::min(rate, user.rate_max);
    }
    const double y = pair_yield(rate * tau);
    const auto floor_y = static_cast<std::int64_t>(std::floor(y));
    if (floor_y != m) {
      throw std::logic_error("materialize_cells: could not realise " + std::to_string(m) +
                             " cells for user " + std::to_string(j));
    }
    out.rates.push_back(rate);
    out.yields.push_back(y);
    out.memory_cells.push_back(floor_y);
  }
  out.objective = objective(scenario, out.rates);
  return out;
}

RateAllocation solve_continuous(const Scenario& scenario, const SolverOptions& options) {
  validate(scenario);
  validate(options);
  const Feasibility feasibility = check_feasibility(scenario);
  if (feasibility != Feasibility::feasible) return infeasible(feasibility, Relaxation::continuous);

  const std::size_t n = scenario.size();
  const YieldBounds yb = yield_bounds(scenario);
  const std::vector<double> c = coefficients(scenario);
  const double budget = continuous_budget(scenario, yb);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return c[a] > c[b]; });

  std::vector<double> y = yb.lower;
  double sum_lower_after = std::accumulate(yb.lower.begin(), yb.lower.end(), 0.0);
  double sum_upper_before = 0.0;
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start;
    while (end < n && c[order[end]] == c[order[start]]) ++end;
    const std::span<const std::size_t> group(order.data() + start, end - start);

    double group_lower = 0.0;
    double group_upper = 0.0;
    for (std::size_t i : group) {
      group_lower += yb.lower[i];
      group_upper += yb.upper[i];
    }
    sum_lower_after -= group_lower;
    const double target = budget - sum_upper_before - sum_lower_after;
    if (target >= group_upper) {
      for (std::size_t i : group) y[i] = yb.upper[i];
      sum_upper_before += group_upper;
      start = end;
      continue;
    }
    if (target > group_lower) {
      if (options.tie_break == TieBreak::waterfill) {
        waterfill_exact(group, yb, target, y);
      } else {
        fill_in_order(group, yb, target, y);
      }
    }
    break;  // every later group stays at its lower bound
  }

  RateAllocation out = materialize_yields(scenario, y);
  check_budget(out, budget, options.tolerance);
  return out;
}

RateAllocation solve_dual(const Scenario& scenario, const SolverOptions& options) {
  validate(scenario);
  validate(options);
  const Feasibility feasibility = check_feasibility(scenario);
  if (feasibility != Feasibility::feasible) return infeasible(feasibility, Relaxation::continuous);

  const std::size_t n = scenario.size();
  const YieldBounds yb = yield_bounds(scenario);
  const std::vector<double> c = coefficients(scenario);
  const double budget = continuous_budget(scenario, yb);

  // Yield demanded at multiplier lambda; users with c_j == lambda sit low.
  auto demand = [&](double lambda) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += c[j] > lambda ? yb.upper[j] : yb.lower[j];
    return sum;
  };
  const auto [cmin, cmax] = std::minmax_element(c.begin(), c.end());
  double lo = *cmin - 1.0;  // demand(lo) = sum upper >= budget
  double hi = *cmax + 1.0;  // demand(hi) = sum lower

  std::vector<double> y = yb.lower;
  if (demand(hi) < budget) {
    // Number of distinct coefficients inside the bracket (lo, hi].
    auto marginal_values = [&]() {
      std::vector<double> inside;
      for (double cj : c) {
        if (cj > lo && cj <= hi) inside.push_back(cj);
      }
      std::sort(inside.begin(), inside.end());
      return static_cast<std::size_t>(std::unique(inside.begin(), inside.end()) - inside.begin());
    };
    while (marginal_values() > 1) {
      const double mid = lo + 0.5 * (hi - lo);
      if (mid <= lo || mid >= hi) break;
      if (demand(mid) >= budget) {
        lo = mid;
      } else {
        hi = mid;
      }
    }

    std::vector<std::size_t> group;
    double target = budget;
    for (std::size_t j = 0; j < n; ++j) {
      if (c[j] > hi) {
        y[j] = yb.upper[j];
        target -= yb.upper[j];
      } else if (c[j] <= lo) {
        target -= yb.lower[j];
      } else {
        group.push_back(j);
      }
    }

    if (options.tie_break == TieBreak::waterfill) {
      // Water level by bisection, independent of the greedy's breakpoint walk.
      double level_lo = std::numeric_limits<double>::infinity();
      double level_hi = -std::numeric_limits<double>::infinity();
      for (std::size_t i : group) {
        level_lo = std::min(level_lo, yb.lower[i]);
        level_hi = std::max(level_hi, yb.upper[i]);
      }
      auto filled = [&](double level) {
        double sum = 0.0;
        for (std::size_t i : group) sum += std::clamp(level, yb.lower[i], yb.upper[i]);
        return sum;
      };
      for (int iter = 0; iter < 200; ++iter) {
        const double mid = level_lo + 0.5 * (level_hi - level_lo);
        if (mid <= level_lo || mid >= level_hi) break;
        if (filled(mid) < target) {
          level_lo = mid;
        } else {
          level_hi = mid;
        }
      }
      const double level = level_lo + 0.5 * (level_hi - level_lo);
      for (std::size_t i : group) y[i] = std::clamp(level, yb.lower[i], yb.upper[i]);
    } else {
      fill_in_order(group, yb, target, y);
    }
  }

  RateAllocation out = materialize_yields(scenario, y);
  check_budget(out, budget, options.tolerance);
  return out;
}

namespace {

struct PathValue {
  double value = 0.0;
  double spread = 0.0;  // sum of m^2 along the path; smaller is more balanced
  bool reachable = false;
};

bool same_value(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

// Strict preference of `a` over `b`.
bool prefer(const PathValue& a, const PathValue& b, TieBreak tie_break) {
  if (!a.reachable) return false;
  if (!b.reachable) return true;
  if (!same_value(a.value, b.value)) return a.value > b.value;
  if (tie_break == TieBreak::waterfill) return a.spread < b.spread;
  return false;
}

}  // namespace

RateAllocation solve_integer(const Scenario& scenario, const SolverOptions& options) {
  validate(scenario);
  validate(options);
  const Feasibility feasibility = check_integer_feasibility(scenario);
  if (feasibility != Feasibility::feasible) return infeasible(feasibility, Relaxation::integer);

  const std::size_t n = scenario.size();
  const YieldBounds yb = yield_bounds(scenario);
  const CellBounds cb = cell_bounds(scenario);
  const std::vector<double> c = coefficients(scenario);

  std::int64_t budget = scenario.node.memory_capacity;
  if (scenario.node.constraint_mode == ConstraintMode::at_most) {
    budget = std::min(budget, std::accumulate(cb.upper.begin(), cb.upper.end(), std::int64_t{0}));
  }
  const auto width = static_cast<std::size_t>(budget) + 1;

  auto gain = [&](std::size_t j, std::int64_t m) {
    return c[j] * std::max(static_cast<double>(m), yb.lower[j]);
  };

  // suffix[j][b]: best over users j..n-1 using exactly b cells.
  std::vector<std::vector<PathValue>> suffix(n + 1, std::vector<PathValue>(width));
  suffix[n][0] = {0.0, 0.0, true};
  for (std::size_t j = n; j-- > 0;) {
    for (std::size_t b = 0; b < width; ++b) {
      PathValue best;
      const auto cap = std::min<std::int64_t>(cb.upper[j], static_cast<std::int64_t>(b));
      for (std::int64_t m = cb.lower[j]; m <= cap; ++m) {
        const PathValue& rest = suffix[j + 1][b - static_cast<std::size_t>(m)];
        if (!rest.reachable) continue;
        const PathValue candidate{gain(j, m) + rest.value,
                                  static_cast<double>(m * m) + rest.spread, true};
        if (prefer(candidate, best, options.tie_break)) best = candidate;
      }
      suffix[j][b] = best;
    }
  }

  // Forward pass: the largest m_j that is not worse than the optimum gives
  // the lexicographically largest optimal vector.
  std::vector<std::int64_t> cells(n);
  std::size_t remaining = width - 1;
  for (std::size_t j = 0; j < n; ++j) {
    const PathValue& best = suffix[j][remaining];
    const auto cap = std::min<std::int64_t>(cb.upper[j], static_cast<std::int64_t>(remaining));
    for (std::int64_t m = cap; m >= cb.lower[j]; --m) {
      const PathValue& rest = suffix[j + 1][remaining - static_cast<std::size_t>(m)];
      if (!rest.reachable) continue;
      const PathValue candidate{gain(j, m) + rest.value,
                                static_cast<double>(m * m) + rest.spread, true};
      if (!prefer(best, candidate, options.tie_break)) {
        cells[j] = m;
        remaining -= static_cast<std::size_t>(m);
        break;
      }
    }
  }

  RateAllocation out = materialize_cells(scenario, cells);
  out.feasibility = feasibility;
  return out;
}

RateAllocation solve(const Scenario& scenario, const SolverOptions& options) {
  return options.relaxation == Relaxation::integer ? solve_integer(scenario, options)
                                                   : solve_continuous(scenario, options);
}

}  // namespace entrate
