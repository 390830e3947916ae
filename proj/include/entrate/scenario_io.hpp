#pragma once

// Scenario files (JSON):
//
//   {
//     "node": {"memory_capacity": 35, "decoherence_rate_ebit_s": 1e9, "alpha": 3,
//              "attenuation_mode": "natural", "constraint_mode": "equality"},
//     "user": [{"distance_km": 2, "attenuation_per_km": 0.2, "weight": 1,
//               "rate_min_ebit_s": 1.2e9, "rate_max_ebit_s": 1e10}, ...]
//   }
//
// The two mode keys are optional; everything else is required and unknown
// keys are rejected.

#include <stdexcept>
#include <string>
#include <string_view>

#include "entrate/model.hpp"
#include "json.hpp"

namespace entrate {

/// Parse or validation failure; what() starts with the field path.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Scenario parse_scenario(std::string_view text);
Scenario scenario_from_json(const nlohmann::json& doc, const std::string& path = "");
UserProfile user_from_json(const nlohmann::json& doc, const std::string& path);

nlohmann::json to_json(const Scenario& scenario);
nlohmann::json to_json(const UserProfile& user);
std::string serialize_scenario(const Scenario& scenario);

Scenario load_scenario_file(const std::string& file);

/// Reads a whole file; throws ParseError if it cannot be opened.
std::string read_text_file(const std::string& file);

// Helpers shared with the sweep-spec reader.
namespace json_fields {

void reject_unknown(const nlohmann::json& object, std::initializer_list<std::string_view> known,
                    const std::string& path);
const nlohmann::json& require(const nlohmann::json& object, std::string_view key,
                              const std::string& path);
double number(const nlohmann::json& value, const std::string& path);
std::int64_t integer(const nlohmann::json& value, const std::string& path);
std::string text(const nlohmann::json& value, const std::string& path);
std::string join(const std::string& path, std::string_view key);

}  // namespace json_fields

}  // namespace entrate
