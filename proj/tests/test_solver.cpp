#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "entrate/model.hpp"
#include "entrate/oracle.hpp"
#include "entrate/solver.hpp"
#include "support.hpp"

using namespace entrate;
using entrate::test::close_rel;
using entrate::test::make_node;
using entrate::test::make_user;

namespace {

constexpr double kTau = 3e-9;
constexpr double kExpM04 = 0.670320046035639300744;
constexpr double kThreshold = 5833333479.80822339835;  // h^{-1}(17.5) / 3 ns

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

void check_allocation_invariants(const Scenario& s, const RateAllocation& a) {
  REQUIRE(a.optimal());
  REQUIRE(a.rates.size() == s.size());
  for (std::size_t j = 0; j < s.size(); ++j) {
    REQUIRE(a.rates[j] >= s.users[j].rate_min);
    REQUIRE(a.rates[j] <= s.users[j].rate_max);
    REQUIRE(a.memory_cells[j] == static_cast<std::int64_t>(std::floor(a.yields[j])));
  }
  REQUIRE(close_rel(objective(s, a.rates), a.objective, 1e-9));
}

Scenario random_scenario(std::mt19937_64& rng, std::size_t n) {
  Scenario s{make_node(1, test::uniform(rng, 2.2, 4.0)), {}};
  double lo = 0.0, hi = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double emin = test::uniform(rng, 1.05e9, 3e9);
    const double emax = emin + test::uniform(rng, 5e8, 8e9);
    s.users.push_back(make_user(test::uniform(rng, 0.5, 10), test::uniform(rng, 0.2, 2), emin, emax));
    lo += pair_yield(emin * s.tau());
    hi += pair_yield(emax * s.tau());
  }
  const double c = test::uniform(rng, lo, hi);
  s.node.memory_capacity = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(c)));
  if (static_cast<double>(s.node.memory_capacity) > hi) s.node.memory_capacity -= 1;
  return s;
}

}  // namespace

TEST_CASE("coefficient") {
  CHECK(coefficient(make_user(0, 1, 1.2e9), AttenuationMode::natural) == 1.0);
  CHECK(close_rel(coefficient(make_user(2, 1, 1.2e9), AttenuationMode::natural), kExpM04, 1e-15));
  CHECK(close_rel(coefficient(make_user(2, 0.4, 1.2e9), AttenuationMode::natural),
                  0.268128018414255720298, 1e-15));
}

TEST_CASE("check_feasibility") {
  CHECK(check_feasibility(test::symmetric_pair(5.9e9, 5.9e9)) == Feasibility::infeasible_high);
  Scenario tau66 = test::symmetric_pair(2.6e9, 2.8e9);
  tau66.node.alpha = 6.6;  // tau = 6.6 ns
  CHECK(check_feasibility(tau66) == Feasibility::infeasible_high);
  CHECK(check_feasibility(test::symmetric_pair()) == Feasibility::feasible);

  Scenario low = test::symmetric_pair();
  low.node.memory_capacity = 61;
  CHECK(check_feasibility(low) == Feasibility::infeasible_low);
  low.node.constraint_mode = ConstraintMode::at_most;
  CHECK(check_feasibility(low) == Feasibility::feasible);
}

TEST_CASE("solve_continuous: symmetric users split evenly") {
  const Scenario s = test::symmetric_pair();
  const RateAllocation a = solve_continuous(s);
  check_allocation_invariants(s, a);
  CHECK(close_rel(a.yields[0], 17.5, 1e-12));
  CHECK(close_rel(a.yields[1], 17.5, 1e-12));
  CHECK(close_rel(a.rates[0], kThreshold, 1e-12));
  CHECK(close_rel(a.rates[1], kThreshold, 1e-12));
  CHECK(close_rel(a.objective, 35.0 * kExpM04, 1e-12));
  CHECK(a.memory_cells == std::vector<std::int64_t>{17, 17});
}

TEST_CASE("solve_continuous: raised minimum below the fair share") {
  const Scenario s = test::symmetric_pair(1.2e9, 5e9);
  const RateAllocation a = solve_continuous(s);
  check_allocation_invariants(s, a);
  // h(15) < 17.5, so waterfill still equalises
  CHECK(close_rel(a.yields[0], 17.5, 1e-12));
  CHECK(close_rel(a.yields[1], 17.5, 1e-12));

  SolverOptions lex;
  lex.tie_break = TieBreak::lexicographic;
  const RateAllocation b = solve_continuous(s, lex);
  check_allocation_invariants(s, b);
  CHECK(close_rel(b.yields[1], 14.9999954114651924726, 1e-12));
  CHECK(close_rel(b.yields[0], 35.0 - 14.9999954114651924726, 1e-12));
  CHECK(close_rel(b.rates[1], 5e9, 1e-15));
  CHECK(close_rel(a.objective, b.objective, 1e-12));
}

TEST_CASE("solve_continuous: the nearer user saturates") {
  Scenario s{make_node(35), {make_user(2, 1, 1.2e9), make_user(5, 1, 2.4e9)}};
  const RateAllocation a = solve_continuous(s);
  check_allocation_invariants(s, a);
  const double y2 = pair_yield(2.4e9 * kTau);
  CHECK(a.rates[1] == 2.4e9);
  CHECK(close_rel(a.yields[0], std::min(pair_yield(1e10 * kTau), 35.0 - y2), 1e-12));
  CHECK(close_rel(sum(a.yields), 35.0, 1e-12));
}

TEST_CASE("solve_continuous: infeasible carries no rates") {
  const RateAllocation a = solve_continuous(test::symmetric_pair(5.9e9, 5.9e9));
  CHECK(a.status == AllocationStatus::infeasible);
  CHECK(a.feasibility == Feasibility::infeasible_high);
  CHECK(a.rates.empty());
  CHECK(a.yields.empty());
}

TEST_CASE("solve_continuous: at_most caps the budget at the upper bounds") {
  Scenario s = test::symmetric_pair();
  s.node.memory_capacity = 100;
  s.node.constraint_mode = ConstraintMode::at_most;
  const RateAllocation a = solve_continuous(s);
  check_allocation_invariants(s, a);
  CHECK(a.rates[0] == 1e10);
  CHECK(a.rates[1] == 1e10);
}

TEST_CASE("solve_dual agrees with the greedy") {
  const Scenario s = test::symmetric_pair();
  CHECK(close_rel(solve_dual(s).objective, solve_continuous(s).objective, 1e-9));

  Scenario one{make_node(20), {make_user(1, 1, 1.2e9)}};
  const RateAllocation d = solve_dual(one);
  REQUIRE(d.optimal());
  CHECK(close_rel(d.yields[0], 20.0, 1e-12));

  std::mt19937_64 rng(21);
  for (int i = 0; i < 50; ++i) {
    const Scenario t = random_scenario(rng, 3);
    const RateAllocation g = solve_continuous(t);
    const RateAllocation l = solve_dual(t);
    REQUIRE(g.optimal());
    REQUIRE(l.optimal());
    REQUIRE(close_rel(g.objective, l.objective, 1e-9));
    for (std::size_t j = 0; j < 3; ++j) REQUIRE(close_rel(g.rates[j], l.rates[j], 1e-6));
  }
}

TEST_CASE("solve_integer examples") {
  SolverOptions integer;
  integer.relaxation = Relaxation::integer;
  SolverOptions lex = integer;
  lex.tie_break = TieBreak::lexicographic;

  const Scenario s = test::symmetric_pair();
  const RateAllocation a = solve(s, integer);
  REQUIRE(a.optimal());
  CHECK(a.relaxation == Relaxation::integer);
  CHECK(a.memory_cells == std::vector<std::int64_t>{18, 17});
  CHECK(memory_usage(s, a.rates).integer == 35);
  CHECK(a.objective == enumerate_integer_best(s).objective);
  // scenario order fills user 0 up to floor(h(30)) = 29
  const RateAllocation l = solve(s, lex);
  CHECK(l.memory_cells == std::vector<std::int64_t>{29, 6});
  CHECK(l.memory_cells == enumerate_integer_best(s, TieBreak::lexicographic).memory_cells);
  CHECK(l.objective == doctest::Approx(a.objective).epsilon(1e-12));

  Scenario one{make_node(35), {make_user(2, 1, 1.2e9, 2e10)}};
  const RateAllocation b = solve(one, integer);
  REQUIRE(b.optimal());
  CHECK(b.memory_cells == std::vector<std::int64_t>{35});
  CHECK(close_rel(b.rates[0], pair_yield_inverse(35.0) / kTau, 1e-12));
  CHECK(std::floor(pair_yield(b.rates[0] * kTau)) == 35.0);

  // floor(h(eps_max tau)) = 30 needs eps_max slightly above 1e10 at 3 ns
  Scenario cap{make_node(35), {make_user(2, 1, 1.2e9, 1.01e10), make_user(5, 1, 1.2e9)}};
  REQUIRE(cell_bounds(cap).upper[0] == 30);
  const RateAllocation c = solve(cap, integer);
  REQUIRE(c.optimal());
  CHECK(c.memory_cells == std::vector<std::int64_t>{30, 5});
  CHECK(c.memory_cells == enumerate_integer_best(cap).memory_cells);
}

TEST_CASE("solve_integer: infeasible and at_most") {
  SolverOptions integer;
  integer.relaxation = Relaxation::integer;
  // floor(h(17.7)) = 17 per user still fits 35 cells; 6.5e9 gives 19 each
  CHECK(solve(test::symmetric_pair(5.9e9, 5.9e9), integer).optimal());
  const RateAllocation a = solve(test::symmetric_pair(6.5e9, 6.5e9), integer);
  CHECK(a.feasibility == Feasibility::infeasible_high);
  CHECK(a.status == AllocationStatus::infeasible);
  CHECK(a.rates.empty());

  Scenario s = test::symmetric_pair();
  s.node.memory_capacity = 100;
  s.node.constraint_mode = ConstraintMode::at_most;
  const RateAllocation b = solve(s, integer);
  REQUIRE(b.optimal());
  CHECK(b.memory_cells == std::vector<std::int64_t>{29, 29});
}

TEST_CASE("solver options are validated") {
  SolverOptions o;
  o.tolerance = 0.0;
  CHECK_THROWS_AS(validate(o), std::invalid_argument);
  CHECK_THROWS_AS(solve(test::symmetric_pair(), o), std::invalid_argument);
}

// ---------------------------------------------------------------- properties

TEST_CASE("property: constraint satisfaction and allocation invariants") {
  std::mt19937_64 rng(22);
  SolverOptions integer;
  integer.relaxation = Relaxation::integer;
  for (int i = 0; i < 300; ++i) {
    const Scenario s = random_scenario(rng, 1 + i % 6);
    const RateAllocation a = solve_continuous(s);
    check_allocation_invariants(s, a);
    REQUIRE(std::abs(sum(a.yields) - static_cast<double>(s.node.memory_capacity)) <=
            1e-9 * static_cast<double>(s.node.memory_capacity));
    REQUIRE(close_rel(memory_usage(s, a.rates).continuous, sum(a.yields), 1e-9));

    const RateAllocation b = solve(s, integer);
    if (check_integer_feasibility(s) == Feasibility::feasible) {
      check_allocation_invariants(s, b);
      REQUIRE(memory_usage(s, b.rates).integer == s.node.memory_capacity);
    } else {
      REQUIRE(!b.optimal());
    }
  }
}

TEST_CASE("property: at most one interior user when coefficients are distinct") {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 300; ++i) {
    const Scenario s = random_scenario(rng, 2 + i % 5);
    const RateAllocation a = solve_continuous(s);
    REQUIRE(a.optimal());
    const YieldBounds b = yield_bounds(s);
    int interior = 0;
    double marginal = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double width = b.upper[j] - b.lower[j];
      if (a.yields[j] > b.lower[j] + 1e-9 * width && a.yields[j] < b.upper[j] - 1e-9 * width) {
        ++interior;
        marginal = coefficient(s.users[j], s.node.attenuation_mode);
      }
    }
    REQUIRE(interior <= 1);
    if (interior == 1) {
      for (std::size_t j = 0; j < s.size(); ++j) {
        const double c = coefficient(s.users[j], s.node.attenuation_mode);
        if (c > marginal) REQUIRE(a.yields[j] == doctest::Approx(b.upper[j]));
        if (c < marginal) REQUIRE(a.yields[j] == doctest::Approx(b.lower[j]));
      }
    }
  }
}

TEST_CASE("property: objective invariant to minimum reshuffling among identical users") {
  const double base = solve_continuous(test::symmetric_pair()).objective;
  std::mt19937_64 rng(24);
  for (int i = 0; i < 500; ++i) {
    const double e1 = test::uniform(rng, 1.05e9, 5.8e9);
    const double e2 = test::uniform(rng, 1.05e9, 5.8e9);
    const Scenario s = test::symmetric_pair(e1, e2);
    if (check_feasibility(s) != Feasibility::feasible) continue;
    REQUIRE(close_rel(solve_continuous(s).objective, base, 1e-9));
  }
}

TEST_CASE("property: raising a weight never lowers that user's yield") {
  std::mt19937_64 rng(25);
  for (int i = 0; i < 300; ++i) {
    Scenario s = random_scenario(rng, 2 + i % 4);
    const std::size_t k = static_cast<std::size_t>(i) % s.size();
    const double before = solve_continuous(s).yields[k];
    s.users[k].weight *= test::uniform(rng, 1.0, 5.0);
    REQUIRE(solve_continuous(s).yields[k] >= before - 1e-9 * before);
  }
  // tied coefficients broken deterministically in favour of the heavier user
  Scenario s = test::symmetric_pair();
  s.users[1].weight = 1.0 + 1e-12;
  CHECK(solve_continuous(s).yields[1] >= solve_continuous(test::symmetric_pair()).yields[1]);
}

TEST_CASE("property: objective nondecreasing in memory capacity") {
  std::mt19937_64 rng(26);
  for (int i = 0; i < 100; ++i) {
    Scenario s = random_scenario(rng, 1 + i % 4);
    double previous = -1.0;
    for (std::int64_t c = 1; c <= 100; ++c) {
      s.node.memory_capacity = c;
      const RateAllocation a = solve_continuous(s);
      if (!a.optimal()) continue;
      REQUIRE(a.objective >= previous);
      previous = a.objective;
    }
  }
}

TEST_CASE("property: symmetric rates decrease as tau grows") {
  Scenario s = test::symmetric_pair(2.4e9, 2.4e9);
  double previous = 1e300;
  for (double tau = 3e-9; tau <= 7.2e-9; tau += 1e-10) {
    s.node.alpha = tau * s.node.decoherence_rate;
    const RateAllocation a = solve_continuous(s);
    REQUIRE(a.optimal());
    REQUIRE(a.rates[0] < previous);
    REQUIRE(a.rates[0] == a.rates[1]);
    previous = a.rates[0];
  }
}

TEST_CASE("property: solving is deterministic") {
  std::mt19937_64 rng(27);
  for (int i = 0; i < 50; ++i) {
    const Scenario s = random_scenario(rng, 3);
    const RateAllocation a = solve_continuous(s);
    const RateAllocation b = solve_continuous(s);
    REQUIRE(a.rates == b.rates);
    REQUIRE(a.objective == b.objective);
  }
}
