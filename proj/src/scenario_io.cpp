#include "entrate/scenario_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace entrate {

namespace json_fields {

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

void reject_unknown(const nlohmann::json& object, std::initializer_list<std::string_view> known,
                    const std::string& path) {
  if (!object.is_object()) {
    throw ParseError((path.empty() ? std::string("document") : path) + ": expected an object");
  }
  for (const auto& item : object.items()) {
    bool ok = false;
    for (std::string_view k : known) ok = ok || item.key() == k;
    if (!ok) throw ParseError(join(path, item.key()) + ": unknown key");
  }
}

const nlohmann::json& require(const nlohmann::json& object, std::string_view key,
                              const std::string& path) {
  const auto it = object.find(key);
  if (it == object.end()) throw ParseError(join(path, key) + ": missing required field");
  return *it;
}

double number(const nlohmann::json& value, const std::string& path) {
  if (!value.is_number()) throw ParseError(path + ": expected a number");
  const double v = value.get<double>();
  if (!std::isfinite(v)) throw ParseError(path + ": expected a finite number");
  return v;
}

std::int64_t integer(const nlohmann::json& value, const std::string& path) {
  if (value.is_number_integer()) return value.get<std::int64_t>();
  if (value.is_number_float()) {
    const double v = value.get<double>();
    if (std::isfinite(v) && std::floor(v) == v && std::abs(v) < 9.0e15) {
      return static_cast<std::int64_t>(v);
    }
  }
  throw ParseError(path + ": expected an integer");
}

std::string text(const nlohmann::json& value, const std::string& path) {
  if (!value.is_string()) throw ParseError(path + ": expected a string");
  return value.get<std::string>();
}

}  // namespace json_fields

using namespace json_fields;

namespace {

AttenuationMode attenuation_from(const std::string& s, const std::string& path) {
  if (s == "natural") return AttenuationMode::natural;
  if (s == "decibel") return AttenuationMode::decibel;
  throw ParseError(path + ": expected \"natural\" or \"decibel\"");
}

ConstraintMode constraint_from(const std::string& s, const std::string& path) {
  if (s == "equality") return ConstraintMode::equality;
  if (s == "at_most") return ConstraintMode::at_most;
  throw ParseError(path + ": expected \"equality\" or \"at_most\"");
}

NodeConfig node_from_json(const nlohmann::json& doc, const std::string& path) {
  reject_unknown(doc,
                 {"memory_capacity", "decoherence_rate_ebit_s", "alpha", "attenuation_mode",
                  "constraint_mode"},
                 path);
  NodeConfig node;
  node.memory_capacity =
      integer(require(doc, "memory_capacity", path), join(path, "memory_capacity"));
  node.decoherence_rate = number(require(doc, "decoherence_rate_ebit_s", path),
                                 join(path, "decoherence_rate_ebit_s"));
  node.alpha = number(require(doc, "alpha", path), join(path, "alpha"));
  if (doc.contains("attenuation_mode")) {
    const std::string p = join(path, "attenuation_mode");
    node.attenuation_mode = attenuation_from(text(doc["attenuation_mode"], p), p);
  }
  if (doc.contains("constraint_mode")) {
    const std::string p = join(path, "constraint_mode");
    node.constraint_mode = constraint_from(text(doc["constraint_mode"], p), p);
  }
  return node;
}

// Model validation throws std::invalid_argument; callers of the reader see
// ParseError only.
template <typename F>
void rethrow_as_parse_error(F&& check) {
  try {
    check();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

}  // namespace

UserProfile user_from_json(const nlohmann::json& doc, const std::string& path) {
  reject_unknown(doc,
                 {"distance_km", "attenuation_per_km", "weight", "rate_min_ebit_s",
                  "rate_max_ebit_s"},
                 path);
  UserProfile user;
  user.distance_km = number(require(doc, "distance_km", path), join(path, "distance_km"));
  user.attenuation_per_km =
      number(require(doc, "attenuation_per_km", path), join(path, "attenuation_per_km"));
  user.weight = number(require(doc, "weight", path), join(path, "weight"));
  user.rate_min = number(require(doc, "rate_min_ebit_s", path), join(path, "rate_min_ebit_s"));
  user.rate_max = number(require(doc, "rate_max_ebit_s", path), join(path, "rate_max_ebit_s"));
  return user;
}

Scenario scenario_from_json(const nlohmann::json& doc, const std::string& path) {
  reject_unknown(doc, {"node", "user"}, path);
  Scenario scenario;
  scenario.node = node_from_json(require(doc, "node", path), join(path, "node"));
  const nlohmann::json& users = require(doc, "user", path);
  const std::string users_path = join(path, "user");
  if (!users.is_array()) throw ParseError(users_path + ": expected an array of user objects");
  for (std::size_t j = 0; j < users.size(); ++j) {
    scenario.users.push_back(user_from_json(users[j], users_path + "[" + std::to_string(j) + "]"));
  }
  rethrow_as_parse_error([&] { validate(scenario); });
  return scenario;
}

Scenario parse_scenario(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("document: malformed JSON: ") + e.what());
  }
  return scenario_from_json(doc);
}

nlohmann::json to_json(const UserProfile& user) {
  return {{"distance_km", user.distance_km},
          {"attenuation_per_km", user.attenuation_per_km},
          {"weight", user.weight},
          {"rate_min_ebit_s", user.rate_min},
          {"rate_max_ebit_s", user.rate_max}};
}

nlohmann::json to_json(const Scenario& scenario) {
  nlohmann::json users = nlohmann::json::array();
  for (const UserProfile& user : scenario.users) users.push_back(to_json(user));
  return {{"node",
           {{"memory_capacity", scenario.node.memory_capacity},
            {"decoherence_rate_ebit_s", scenario.node.decoherence_rate},
            {"alpha", scenario.node.alpha},
            {"attenuation_mode", to_string(scenario.node.attenuation_mode)},
            {"constraint_mode", to_string(scenario.node.constraint_mode)}}},
          {"user", users}};
}

std::string serialize_scenario(const Scenario& scenario) { return to_json(scenario).dump(2); }

std::string read_text_file(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ParseError(file + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Scenario load_scenario_file(const std::string& file) {
  const std::string text = read_text_file(file);
  try {
    return parse_scenario(text);
  } catch (const ParseError& e) {
    throw ParseError(file + ": " + e.what());
  }
}

}  // namespace entrate
