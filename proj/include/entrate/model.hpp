#pragma once

// Success-probability and memory-occupancy model for a single quantum node
// that generates entangled pairs for N users and stores one photon of every
// pair in a shared memory of C qubits.
//
// Internally everything is expressed in the dimensionless pair count
// x = r * tau (pairs generated per window) and the stored yield
// y = h(x) = x * (1 - exp(-x)). Rates in ebit/s only appear at the boundary.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace entrate {

enum class AttenuationMode { natural, decibel };
enum class ConstraintMode { equality, at_most };

std::string to_string(AttenuationMode mode);
std::string to_string(ConstraintMode mode);

struct UserProfile {
  double distance_km = 0.0;
  double attenuation_per_km = 0.0;
  double weight = 1.0;
  double rate_min = 0.0;  // ebit/s
  double rate_max = 0.0;  // ebit/s

  friend bool operator==(const UserProfile&, const UserProfile&) = default;
};

struct NodeConfig {
  std::int64_t memory_capacity = 1;  // qubits
  double decoherence_rate = 1.0;     // ebit/s
  double alpha = 3.0;
  AttenuationMode attenuation_mode = AttenuationMode::natural;
  ConstraintMode constraint_mode = ConstraintMode::equality;

  /// Generation window length, the only place tau is derived.
  double tau() const { return alpha / decoherence_rate; }

  friend bool operator==(const NodeConfig&, const NodeConfig&) = default;
};

struct Scenario {
  NodeConfig node;
  std::vector<UserProfile> users;

  std::size_t size() const { return users.size(); }
  double tau() const { return node.tau(); }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

enum class AllocationStatus { optimal, infeasible };

enum class Feasibility {
  feasible,
  infeasible_low,   // even maximum rates cannot fill the memory (equality mode)
  infeasible_high,  // minimum rates already overflow the memory
};

enum class Relaxation { continuous, integer };

std::string to_string(AllocationStatus status);
std::string to_string(Feasibility feasibility);
std::string to_string(Relaxation relaxation);

struct RateAllocation {
  std::vector<double> rates;                // ebit/s
  std::vector<double> yields;               // h(r_j tau)
  std::vector<std::int64_t> memory_cells;   // floor(yields_j)
  double objective = 0.0;
  AllocationStatus status = AllocationStatus::infeasible;
  Feasibility feasibility = Feasibility::feasible;
  Relaxation relaxation = Relaxation::continuous;

  bool optimal() const { return status == AllocationStatus::optimal; }
};

// Validation. Each throws std::invalid_argument with a message that starts
// with the offending field path, e.g. "user[1].rate_min_ebit_s: ...".
void validate(const UserProfile& user, const std::string& path = "user");
void validate(const NodeConfig& node, const std::string& path = "node");
void validate(const Scenario& scenario);

/// P_s1: probability a photon survives the fiber, exp(-beta d) or
/// 10^(-beta d / 10) in decibel mode.
double channel_success_prob(const UserProfile& user, AttenuationMode mode);

/// P_s2 = 1 - exp(-rate tau), evaluated with expm1.
double decoherence_success_prob(double rate, double tau);

/// Expected photons delivered to the user per window, r tau P_s1.
double expected_transmitted(double rate, double tau, const UserProfile& user,
                            AttenuationMode mode = AttenuationMode::natural);

/// h(x) = x (1 - exp(-x)): expected stored pairs surviving decoherence.
double pair_yield(double x);

/// dh/dx = 1 + (x - 1) exp(-x).
double pair_yield_derivative(double x);

/// Unique x >= 0 with h(x) = y. Safeguarded Newton inside a bisection
/// bracket; absolute accuracy better than 1e-12.
double pair_yield_inverse(double y);

/// S_j = P_s1 * h(r tau).
double expected_success_pairs(double rate, double tau, const UserProfile& user,
                              AttenuationMode mode = AttenuationMode::natural);

/// sum_j w_j S_j. Throws std::invalid_argument on a length mismatch.
double objective(const Scenario& scenario, std::span<const double> rates);

struct MemoryUsage {
  double continuous = 0.0;   // sum_j h(r_j tau)
  std::int64_t integer = 0;  // sum_j floor(h(r_j tau))
};

MemoryUsage memory_usage(const Scenario& scenario, std::span<const double> rates);

/// d^2/dr_j^2 of the objective: w_j P_s1 tau^2 (2 - r_j tau) exp(-r_j tau).
std::vector<double> objective_hessian_diag(const Scenario& scenario,
                                           std::span<const double> rates);

}  // namespace entrate
