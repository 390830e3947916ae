#include "entrate/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace entrate {

std::string to_string(AttenuationMode mode) {
  return mode == AttenuationMode::natural ? "natural" : "decibel";
}

std::string to_string(ConstraintMode mode) {
  return mode == ConstraintMode::equality ? "equality" : "at_most";
}

std::string to_string(AllocationStatus status) {
  return status == AllocationStatus::optimal ? "optimal" : "infeasible";
}

std::string to_string(Feasibility feasibility) {
  switch (feasibility) {
    case Feasibility::feasible:
      return "feasible";
    case Feasibility::infeasible_low:
      return "infeasible_low";
    case Feasibility::infeasible_high:
      return "infeasible_high";
  }
  return "unknown";
}

std::string to_string(Relaxation relaxation) {
  return relaxation == Relaxation::continuous ? "continuous" : "integer";
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::invalid_argument(path + ": " + what);
}

void require_finite(double value, const std::string& path) {
  if (!std::isfinite(value)) fail(path, "must be a finite number");
}

}  // namespace

void validate(const UserProfile& user, const std::string& path) {
  require_finite(user.distance_km, path + ".distance_km");
  require_finite(user.attenuation_per_km, path + ".attenuation_per_km");
  require_finite(user.weight, path + ".weight");
  require_finite(user.rate_min, path + ".rate_min_ebit_s");
  require_finite(user.rate_max, path + ".rate_max_ebit_s");
  if (user.distance_km < 0.0) fail(path + ".distance_km", "must be >= 0");
  if (user.attenuation_per_km < 0.0) fail(path + ".attenuation_per_km", "must be >= 0");
  if (user.weight <= 0.0) fail(path + ".weight", "must be > 0");
  if (user.rate_min <= 0.0) fail(path + ".rate_min_ebit_s", "must be > 0");
  if (user.rate_max < user.rate_min) {
    fail(path + ".rate_max_ebit_s", "must be >= rate_min_ebit_s");
  }
}

void validate(const NodeConfig& node, const std::string& path) {
  require_finite(node.decoherence_rate, path + ".decoherence_rate_ebit_s");
  require_finite(node.alpha, path + ".alpha");
  if (node.memory_capacity < 1) fail(path + ".memory_capacity", "must be >= 1");
  if (node.decoherence_rate <= 0.0) fail(path + ".decoherence_rate_ebit_s", "must be > 0");
  // alpha > 2 keeps every admissible rate (r > r_dec) in the concave region r tau > 2.
  if (!(node.alpha > 2.0)) fail(path + ".alpha", "must satisfy alpha > 2 (concavity)");
}

void validate(const Scenario& scenario) {
  validate(scenario.node);
  if (scenario.users.empty()) fail("user", "at least one user is required");
  for (std::size_t j = 0; j < scenario.users.size(); ++j) {
    const std::string path = "user[" + std::to_string(j) + "]";
    validate(scenario.users[j], path);
    if (!(scenario.users[j].rate_min > scenario.node.decoherence_rate)) {
      fail(path + ".rate_min_ebit_s", "must exceed node.decoherence_rate_ebit_s");
    }
  }
}

double channel_success_prob(const UserProfile& user, AttenuationMode mode) {
  const double loss = user.attenuation_per_km * user.distance_km;
  if (mode == AttenuationMode::decibel) return std::pow(10.0, -loss / 10.0);
  return std::exp(-loss);
}

double decoherence_success_prob(double rate, double tau) {
  return -std::expm1(-rate * tau);
}

double expected_transmitted(double rate, double tau, const UserProfile& user,
                            AttenuationMode mode) {
  return rate * tau * channel_success_prob(user, mode);
}

double pair_yield(double x) { return x * -std::expm1(-x); }

double pair_yield_derivative(double x) { return 1.0 + (x - 1.0) * std::exp(-x); }

double pair_yield_inverse(double y) {
  if (!(y >= 0.0) || !std::isfinite(y)) {
    throw std::invalid_argument("pair_yield_inverse: y must be finite and >= 0");
  }
  if (y == 0.0) return 0.0;
  // x^2 >= h(x) and x >= h(x) give the lower end; x - 1/e <= h(x) the upper.
  double lo = std::max(y, std::sqrt(y));
  double hi = y + 1.0;
  if (pair_yield(lo) >= y) return lo;
  while (pair_yield(hi) < y) hi *= 2.0;

  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double f = pair_yield(x) - y;
    if (f == 0.0) return x;
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    const double step = f / pair_yield_derivative(x);
    double next = x - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, x) ||
        hi - lo <= std::numeric_limits<double>::epsilon() * std::max(1.0, x)) {
      return next;
    }
    x = next;
  }
  return x;
}

double expected_success_pairs(double rate, double tau, const UserProfile& user,
                              AttenuationMode mode) {
  return channel_success_prob(user, mode) * pair_yield(rate * tau);
}

namespace {

void require_matching(const Scenario& scenario, std::span<const double> rates) {
  if (rates.size() != scenario.users.size()) {
    throw std::invalid_argument("rates: expected " + std::to_string(scenario.users.size()) +
                                " entries, got " + std::to_string(rates.size()));
  }
}

}  // namespace

double objective(const Scenario& scenario, std::span<const double> rates) {
  require_matching(scenario, rates);
  const double tau = scenario.tau();
  double total = 0.0;
  for (std::size_t j = 0; j < rates.size(); ++j) {
    const UserProfile& user = scenario.users[j];
    total += user.weight *
             expected_success_pairs(rates[j], tau, user, scenario.node.attenuation_mode);
  }
  return total;
}

MemoryUsage memory_usage(const Scenario& scenario, std::span<const double> rates) {
  require_matching(scenario, rates);
  const double tau = scenario.tau();
  MemoryUsage usage;
  for (double rate : rates) {
    const double y = pair_yield(rate * tau);
    usage.continuous += y;
    usage.integer += static_cast<std::int64_t>(std::floor(y));
  }
  return usage;
}

std::vector<double> objective_hessian_diag(const Scenario& scenario,
                                           std::span<const double> rates) {
  require_matching(scenario, rates);
  const double tau = scenario.tau();
  std::vector<double> diag(rates.size());
  for (std::size_t j = 0; j < rates.size(); ++j) {
    const UserProfile& user = scenario.users[j];
    const double x = rates[j] * tau;
    diag[j] = user.weight * channel_success_prob(user, scenario.node.attenuation_mode) *
              tau * tau * (2.0 - x) * std::exp(-x);
  }
  return diag;
}

}  // namespace entrate
