#include <cmath>
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

TEST_CASE("grid oracle: single user lands next to the exact rate") {
  Scenario s{make_node(20), {make_user(1, 1, 1.2e9)}};
  const GridSpec grid{1e7, default_grid_slack(s, 1e7)};
  const GridSearchResult r = brute_force_best(s, grid);
  REQUIRE(r.outcome == GridOutcome::found);
  const double exact = pair_yield_inverse(20.0) / s.tau();
  // the best qualifying point is the nearest or the one just above within slack
  CHECK(std::abs(r.allocation.rates[0] - exact) <= grid.step);
  CHECK(std::abs(r.allocation.yields[0] - 20.0) <= grid.slack);
}

TEST_CASE("grid oracle: symmetric setting matches the solver") {
  // two users make the budget sums dense enough for a slack well below half a gap
  const Scenario s = test::symmetric_pair();
  const GridSearchResult r = brute_force_best(s, GridSpec{1e7, 1e-3});
  REQUIRE(r.outcome == GridOutcome::found);
  CHECK(close_rel(r.allocation.objective, solve_continuous(s).objective, 1e-4));
}

TEST_CASE("grid oracle: infeasible and too-coarse are distinct") {
  const GridSearchResult a = brute_force_best(test::symmetric_pair(5.9e9, 5.9e9), GridSpec{});
  CHECK(a.outcome == GridOutcome::infeasible);
  CHECK(a.allocation.status == AllocationStatus::infeasible);

  Scenario one{make_node(20), {make_user(1, 1, 1.2e9)}};
  const GridSearchResult b = brute_force_best(one, GridSpec{2e9, 1e-6});
  CHECK(b.outcome == GridOutcome::grid_too_coarse);

  Scenario four = test::symmetric_pair();
  four.users.resize(4, four.users[0]);
  CHECK_THROWS_AS(brute_force_best(four, GridSpec{}), std::invalid_argument);
  CHECK_THROWS_AS(brute_force_best(test::symmetric_pair(), GridSpec{0.0, 0.1}), std::invalid_argument);
}

TEST_CASE("grid oracle: nested refinement is monotone and bounded") {
  Scenario s{make_node(35), {make_user(2, 1, 1.2e9), make_user(3.5, 0.9, 1.5e9)}};
  const double slack = default_grid_slack(s, 5e6);
  Scenario upper = s;
  upper.node.constraint_mode = ConstraintMode::at_most;
  // optimum at budget C + slack bounds every qualifying grid point
  const double bound = [&] {
    Scenario t = s;
    t.node.memory_capacity = 36;
    const double lo = solve_continuous(s).objective;
    const double hi = solve_continuous(t).objective;
    return lo + slack * (hi - lo);
  }();
  double previous = -1.0;
  for (double step : {4e7, 2e7, 1e7, 5e6}) {
    const GridSearchResult r = brute_force_best(s, GridSpec{step, slack});
    REQUIRE(r.outcome == GridOutcome::found);
    CHECK(r.allocation.objective >= previous);
    CHECK(r.allocation.objective <= bound * (1 + 1e-12));
    previous = r.allocation.objective;
  }
  CHECK(close_rel(previous, solve_continuous(s).objective, 1e-3));
}

TEST_CASE("integer enumeration examples") {
  const Scenario s = test::symmetric_pair();
  SolverOptions integer;
  integer.relaxation = Relaxation::integer;
  const RateAllocation e = enumerate_integer_best(s);
  REQUIRE(e.optimal());
  CHECK(e.objective == solve_integer(s, integer).objective);
  CHECK(e.memory_cells == std::vector<std::int64_t>{18, 17});

  Scenario one{make_node(35), {make_user(2, 1, 1.2e9, 2e10)}};
  CHECK(enumerate_integer_best(one).memory_cells == std::vector<std::int64_t>{35});

  Scenario distinct{make_node(35), {make_user(2, 1, 1.2e9), make_user(5, 1, 2.4e9)}};
  const RateAllocation d = enumerate_integer_best(distinct);
  CHECK(d.memory_cells == solve_integer(distinct, integer).memory_cells);
  CHECK(d.memory_cells == std::vector<std::int64_t>{28, 7});

  Scenario big = test::symmetric_pair();
  big.node.memory_capacity = 61;
  CHECK_THROWS_AS(enumerate_integer_best(big), std::invalid_argument);
}

TEST_CASE("monte carlo: deterministic survival") {
  NodeConfig node = make_node(35, 40.0);  // r tau = 40 at r = 1e9 keeps P_s2 = 1 - 4e-18
  const UserProfile lossless = make_user(0, 1, 1.01e9);
  const McReport r = monte_carlo_window(lossless, 1e9, node, 1000, 7);
  CHECK(r.pairs_per_window == 40);
  CHECK(r.empirical_mean == 40.0);
  CHECK(r.standard_error == 0.0);
  CHECK(r.z_score() == 0.0);
}

TEST_CASE("monte carlo: window of four pairs") {
  const NodeConfig node = make_node(35);
  const UserProfile user = make_user(2, 1, 1.1e9);
  const McReport r = monte_carlo_window(user, 1.2e9, node, 100000, 2021);
  CHECK(r.pairs_per_window == 4);
  CHECK(close_rel(r.analytic_discrete, 4 * 0.670320046035639300744 * 0.972676277552707439198, 1e-14));
  CHECK(close_rel(r.analytic_continuous, 2.34721586572885843362, 1e-14));
  CHECK(close_rel(r.discretization_bias, r.analytic_discrete - r.analytic_continuous, 1e-15));
  CHECK(std::abs(r.empirical_mean - r.analytic_discrete) <= 3.0 * r.standard_error);

  const McReport single = monte_carlo_window(user, 1.2e9, node, 1, 5);
  CHECK(single.standard_error == 0.0);
  CHECK(single.empirical_mean >= 0.0);
  CHECK(single.empirical_mean <= 4.0);
  CHECK(single.empirical_mean == std::floor(single.empirical_mean));

  CHECK_THROWS_AS(monte_carlo_window(user, 1.2e9, node, 0, 5), std::invalid_argument);
}

TEST_CASE("monte carlo: bit-identical across reruns and thread counts") {
  const NodeConfig node = make_node(35);
  const UserProfile user = make_user(3, 0.7, 1.1e9);
  const McReport a = monte_carlo_window(user, 4.4e9, node, 20000, 99, 1);
  const McReport b = monte_carlo_window(user, 4.4e9, node, 20000, 99, 1);
  const McReport c = monte_carlo_window(user, 4.4e9, node, 20000, 99, 7);
  CHECK(a == b);
  CHECK(a == c);
  const McReport d = monte_carlo_window(user, 4.4e9, node, 20000, 100, 1);
  CHECK(d.empirical_mean != a.empirical_mean);
}

TEST_CASE("property: grid oracle never beats the solver beyond its slack") {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 20; ++i) {
    const std::size_t n = 1 + static_cast<std::size_t>(i % 2);
    Scenario s{make_node(1), {}};
    double lo = 0, hi = 0;
    for (std::size_t j = 0; j < n; ++j) {
      s.users.push_back(make_user(test::uniform(rng, 0.5, 8), test::uniform(rng, 0.3, 2),
                                  test::uniform(rng, 1.05e9, 2.5e9), test::uniform(rng, 5e9, 1e10)));
      lo += pair_yield(s.users[j].rate_min * s.tau());
      hi += pair_yield(s.users[j].rate_max * s.tau());
    }
    s.node.memory_capacity = static_cast<std::int64_t>(std::floor(0.5 * (lo + hi)));
    const GridSearchResult g = brute_force_best(s, GridSpec{1e7, default_grid_slack(s, 1e7)});
    REQUIRE(g.outcome == GridOutcome::found);
    REQUIRE(close_rel(g.allocation.objective, solve_continuous(s).objective, 1e-3));
  }
}
