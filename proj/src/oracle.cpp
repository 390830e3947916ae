#include "entrate/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

#include "entrate/seeding.hpp"

namespace entrate {

__extension__ using u128 = unsigned __int128;

void validate(const GridSpec& grid) {
  if (!(grid.step > 0.0) || !std::isfinite(grid.step)) {
    throw std::invalid_argument("grid.step: must be > 0");
  }
  if (!(grid.slack > 0.0) || !std::isfinite(grid.slack)) {
    throw std::invalid_argument("grid.slack: must be > 0");
  }
}

std::string to_string(GridOutcome outcome) {
  switch (outcome) {
    case GridOutcome::found:
      return "found";
    case GridOutcome::infeasible:
      return "infeasible";
    case GridOutcome::grid_too_coarse:
      return "grid_too_coarse";
  }
  return "unknown";
}

namespace {

struct UserGrid {
  std::vector<double> rates;
  std::vector<double> yields;  // ascending, since h is increasing
  std::vector<double> terms;   // w_j S_j at each grid rate
};

UserGrid make_grid(const UserProfile& user, const NodeConfig& node, double step) {
  UserGrid g;
  const double tau = node.tau();
  for (std::uint64_t k = 0;; ++k) {
    const double rate = user.rate_min + static_cast<double>(k) * step;
    if (rate >= user.rate_max) break;
    g.rates.push_back(rate);
  }
  g.rates.push_back(user.rate_max);
  for (double rate : g.rates) {
    g.yields.push_back(pair_yield(rate * tau));
    g.terms.push_back(user.weight * expected_success_pairs(rate, tau, user, node.attenuation_mode));
  }
  return g;
}

// Feasibility computed here rather than through the solver module.
Feasibility reference_feasibility(const Scenario& scenario) {
  const double tau = scenario.tau();
  double lo = 0.0;
  double hi = 0.0;
  for (const UserProfile& user : scenario.users) {
    lo += pair_yield(user.rate_min * tau);
    hi += pair_yield(user.rate_max * tau);
  }
  const double capacity = static_cast<double>(scenario.node.memory_capacity);
  if (lo > capacity) return Feasibility::infeasible_high;
  if (scenario.node.constraint_mode == ConstraintMode::equality && hi < capacity) {
    return Feasibility::infeasible_low;
  }
  return Feasibility::feasible;
}

}  // namespace

double default_grid_slack(const Scenario& scenario, double step) {
  // h' peaks at x = 2 and decreases beyond it.
  const double tau = scenario.tau();
  double steepest = 0.0;
  for (const UserProfile& user : scenario.users) {
    const double x = std::clamp(2.0, user.rate_min * tau, user.rate_max * tau);
    steepest = std::max(steepest, pair_yield_derivative(x));
  }
  return 0.5 * step * tau * steepest * (1.0 + 1e-9);
}

GridSearchResult brute_force_best(const Scenario& scenario, const GridSpec& grid) {
  validate(scenario);
  validate(grid);
  const std::size_t n = scenario.size();
  if (n > 3) throw std::invalid_argument("brute_force_best: at most 3 users are supported");

  GridSearchResult result;
  result.allocation.relaxation = Relaxation::continuous;
  const Feasibility feasibility = reference_feasibility(scenario);
  result.allocation.feasibility = feasibility;

  std::vector<UserGrid> grids;
  for (const UserProfile& user : scenario.users) {
    grids.push_back(make_grid(user, scenario.node, grid.step));
  }
  std::vector<double> min_tail(n + 1, 0.0);  // sum of smallest yields of users j..n-1
  for (std::size_t j = n; j-- > 0;) min_tail[j] = min_tail[j + 1] + grids[j].yields.front();

  const double capacity = static_cast<double>(scenario.node.memory_capacity);
  const bool equality = scenario.node.constraint_mode == ConstraintMode::equality;
  const double ceiling = capacity + grid.slack;
  const double floor_target = equality ? capacity - grid.slack
                                       : -std::numeric_limits<double>::infinity();

  double best_value = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_index(n), index(n);

  // Users 0..n-2 scan their grids; for the last user the qualifying points
  // form a contiguous index range, whose top point has the largest term.
  std::function<void(std::size_t, double, double)> scan = [&](std::size_t j, double used,
                                                              double value) {
    const UserGrid& g = grids[j];
    if (j + 1 == n) {
      const auto top = std::upper_bound(g.yields.begin(), g.yields.end(), ceiling - used);
      const auto bottom = std::lower_bound(g.yields.begin(), g.yields.end(), floor_target - used);
      if (top <= bottom) return;
      result.candidates += static_cast<std::uint64_t>(top - bottom);
      const auto k = static_cast<std::size_t>(top - g.yields.begin()) - 1;
      const double total = value + g.terms[k];
      if (total > best_value) {
        best_value = total;
        index[j] = k;
        best_index = index;
      }
      return;
    }
    for (std::size_t k = 0; k < g.yields.size(); ++k) {
      if (used + g.yields[k] + min_tail[j + 1] > ceiling) break;
      index[j] = k;
      scan(j + 1, used + g.yields[k], value + g.terms[k]);
    }
  };
  scan(0, 0.0, 0.0);

  if (result.candidates == 0) {
    result.outcome = feasibility == Feasibility::feasible ? GridOutcome::grid_too_coarse
                                                          : GridOutcome::infeasible;
    result.allocation.status = AllocationStatus::infeasible;
    return result;
  }

  RateAllocation& out = result.allocation;
  const double tau = scenario.tau();
  for (std::size_t j = 0; j < n; ++j) {
    const double rate = grids[j].rates[best_index[j]];
    const double y = pair_yield(rate * tau);
    out.rates.push_back(rate);
    out.yields.push_back(y);
    out.memory_cells.push_back(static_cast<std::int64_t>(std::floor(y)));
  }
  out.objective = objective(scenario, out.rates);
  out.status = AllocationStatus::optimal;
  result.outcome = GridOutcome::found;
  return result;
}

RateAllocation enumerate_integer_best(const Scenario& scenario, TieBreak tie_break) {
  validate(scenario);
  const std::size_t n = scenario.size();
  if (n > 3) throw std::invalid_argument("enumerate_integer_best: at most 3 users are supported");
  if (scenario.node.memory_capacity > 60) {
    throw std::invalid_argument("enumerate_integer_best: memory_capacity must be <= 60");
  }

  const double tau = scenario.tau();
  std::vector<double> c, y_min;
  std::vector<std::int64_t> lo, hi;
  for (const UserProfile& user : scenario.users) {
    c.push_back(user.weight * channel_success_prob(user, scenario.node.attenuation_mode));
    y_min.push_back(pair_yield(user.rate_min * tau));
    lo.push_back(static_cast<std::int64_t>(std::floor(y_min.back())));
    hi.push_back(static_cast<std::int64_t>(std::floor(pair_yield(user.rate_max * tau))));
  }

  const std::int64_t capacity = scenario.node.memory_capacity;
  const bool equality = scenario.node.constraint_mode == ConstraintMode::equality;

  bool found = false;
  double best_value = 0.0;
  std::int64_t best_spread = 0;
  std::vector<std::int64_t> best, m(n);

  auto consider = [&]() {
    std::int64_t total = 0;
    std::int64_t spread = 0;
    double value = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      total += m[j];
      spread += m[j] * m[j];
      value += c[j] * std::max(static_cast<double>(m[j]), y_min[j]);
    }
    if (equality ? total != capacity : total > capacity) return;
    bool better = !found;
    if (found) {
      const double scale = std::max({1.0, std::abs(value), std::abs(best_value)});
      if (std::abs(value - best_value) > 1e-12 * scale) {
        better = value > best_value;
      } else if (tie_break == TieBreak::waterfill && spread != best_spread) {
        better = spread < best_spread;
      } else {
        better = m > best;  // lexicographically larger wins the last tie
      }
    }
    if (better) {
      found = true;
      best_value = value;
      best_spread = spread;
      best = m;
    }
  };

  std::function<void(std::size_t)> walk = [&](std::size_t j) {
    if (j == n) {
      consider();
      return;
    }
    for (std::int64_t v = lo[j]; v <= hi[j]; ++v) {
      m[j] = v;
      walk(j + 1);
    }
  };
  walk(0);

  if (!found) {
    RateAllocation out;
    out.relaxation = Relaxation::integer;
    out.status = AllocationStatus::infeasible;
    std::int64_t sum_lo = 0;
    for (auto v : lo) sum_lo += v;
    out.feasibility = sum_lo > capacity ? Feasibility::infeasible_high : Feasibility::infeasible_low;
    return out;
  }
  return materialize_cells(scenario, best);
}

double McReport::z_score() const {
  const double diff = std::abs(empirical_mean - analytic_discrete);
  if (standard_error > 0.0) return diff / standard_error;
  return diff <= 1e-12 * std::max(1.0, analytic_discrete) ? 0.0
                                                          : std::numeric_limits<double>::infinity();
}

McReport monte_carlo_window(const UserProfile& user, double rate, const NodeConfig& node,
                            std::uint64_t trials, std::uint64_t seed, unsigned threads) {
  validate(user);
  validate(node);
  if (trials < 1) throw std::invalid_argument("trials: must be >= 1");
  if (!(rate > 0.0) || !std::isfinite(rate)) throw std::invalid_argument("rate: must be > 0");

  const double tau = node.tau();
  const double p_channel = channel_success_prob(user, node.attenuation_mode);
  const double p_memory = decoherence_success_prob(rate, tau);
  const std::int64_t pairs = std::llround(rate * tau);

  struct Sums {
    u128 count = 0;
    u128 squares = 0;
  };
  auto run_range = [&](std::uint64_t first, std::uint64_t last, Sums& sums) {
    for (std::uint64_t t = first; t < last; ++t) {
      std::mt19937_64 engine(derive_seed(seed, {t}));
      std::uint64_t survived = 0;
      for (std::int64_t k = 0; k < pairs; ++k) {
        const bool through_fiber = unit_interval(engine()) < p_channel;
        const bool kept = unit_interval(engine()) < p_memory;
        survived += (through_fiber && kept) ? 1 : 0;
      }
      sums.count += survived;
      sums.squares += static_cast<u128>(survived) * survived;
    }
  };

  const unsigned workers =
      static_cast<unsigned>(std::clamp<std::uint64_t>(threads == 0 ? 1 : threads, 1, trials));
  std::vector<Sums> partial(workers);
  if (workers == 1) {
    run_range(0, trials, partial[0]);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      const std::uint64_t first = trials * w / workers;
      const std::uint64_t last = trials * (w + 1) / workers;
      pool.emplace_back([&, first, last, w] { run_range(first, last, partial[w]); });
    }
  }
  Sums total;
  for (const Sums& s : partial) {
    total.count += s.count;
    total.squares += s.squares;
  }

  McReport report;
  report.trials = trials;
  report.pairs_per_window = pairs;
  const auto n = static_cast<long double>(trials);
  const auto sum = static_cast<long double>(total.count);
  report.empirical_mean = static_cast<double>(sum / n);
  if (trials > 1) {
    const u128 numerator =
        static_cast<u128>(trials) * total.squares - total.count * total.count;
    const long double variance = static_cast<long double>(numerator) / (n * (n - 1.0L));
    report.standard_error = static_cast<double>(std::sqrt(variance / n));
  }
  report.analytic_discrete = static_cast<double>(pairs) * p_channel * p_memory;
  report.analytic_continuous = expected_success_pairs(rate, tau, user, node.attenuation_mode);
  report.discretization_bias = report.analytic_discrete - report.analytic_continuous;
  return report;
}

}  // namespace entrate
