#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "psim/field_model.hpp"
#include "psim/metrics.hpp"

namespace psim {

// JSON forms of the configuration types. Parsers throw ConfigError naming the
// offending field path.

nlohmann::json to_json(const SourceSpec& s);
nlohmann::json to_json(const ForwardModelSpec& m);
nlohmann::json to_json(const PhaseObjectSpec& o);
nlohmann::json to_json(const ObjectFamily& f);
nlohmann::json to_json(const SsimParams& p);

SourceSpec source_from_json(const nlohmann::json& j, const std::string& path = "source");
ForwardModelSpec model_from_json(const nlohmann::json& j, const std::string& path = "model");
PhaseObjectSpec object_from_json(const nlohmann::json& j, const std::string& path = "object");
ObjectFamily family_from_json(const nlohmann::json& j, const std::string& path = "family");

/// SHA-256 of the compact JSON dump; used as provenance spec hash.
std::string json_hash(const nlohmann::json& j);

namespace detail {

template <typename T>
T field(const nlohmann::json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ConfigError("'" + path + "' must be a JSON object");
  if (!j.contains(key)) throw ConfigError("missing field '" + path + "." + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("field '" + path + "." + key + "' has the wrong type");
  }
}

template <typename T>
T field_or(const nlohmann::json& j, const std::string& key, const std::string& path, T fallback) {
  if (!j.is_object()) throw ConfigError("'" + path + "' must be a JSON object");
  if (!j.contains(key)) return fallback;
  return field<T>(j, key, path);
}

}  // namespace detail
}  // namespace psim
