#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "entrate/model.hpp"

namespace entrate::test {

inline UserProfile make_user(double distance_km, double weight, double rate_min,
                             double rate_max = 1e10, double beta = 0.2) {
  return UserProfile{distance_km, beta, weight, rate_min, rate_max};
}

inline NodeConfig make_node(std::int64_t capacity, double alpha = 3.0, double rate_dec = 1e9) {
  NodeConfig node;
  node.memory_capacity = capacity;
  node.decoherence_rate = rate_dec;
  node.alpha = alpha;
  return node;
}

// C = 35, tau = 3 ns, two users at 2 km with beta = 0.2 and unit weights.
inline Scenario symmetric_pair(double eps_min_1 = 1.2e9, double eps_min_2 = 1.2e9) {
  return Scenario{make_node(35), {make_user(2, 1, eps_min_1), make_user(2, 1, eps_min_2)}};
}

inline bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

// Plain bisection on h, independent of the library's Newton iteration.
inline double bisect_yield_inverse(double y) {
  auto h = [](double x) { return x * -std::expm1(-x); };
  double lo = 0.0;
  double hi = y + 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) < y ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::string source_path(const std::string& relative) {
  return std::string(ENTRATE_SOURCE_DIR) + "/" + relative;
}

}  // namespace entrate::test
