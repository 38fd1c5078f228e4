#pragma once

#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace dualtune {

/// Invalid configuration or file contents.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads fields out of a JSON object and rejects keys nobody asked for.
///
///   FieldReader r(j, "plan");
///   r.get("seed", plan.seed);
///   r.finish();   // throws on unknown keys
class FieldReader {
 public:
  FieldReader(const nlohmann::json& object, std::string context)
      : object_(object), context_(std::move(context)) {
    if (!object_.is_object()) throw ConfigError(context_ + ": expected a JSON object");
  }

  /// Leaves `out` untouched when the key is absent.
  template <typename T>
  bool get(const char* key, T& out) {
    seen_.insert(key);
    auto it = object_.find(key);
    if (it == object_.end()) return false;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(context_ + "." + key + ": " + e.what());
    }
    return true;
  }

  template <typename T>
  void require(const char* key, T& out) {
    if (!get(key, out)) throw ConfigError(context_ + ": missing field '" + key + "'");
  }

  const nlohmann::json* child(const char* key) {
    seen_.insert(key);
    auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : object_.items()) {
      if (!seen_.count(key)) throw ConfigError(context_ + ": unknown field '" + key + "'");
    }
  }

  const std::string& context() const { return context_; }

 private:
  const nlohmann::json& object_;
  std::string context_;
  std::set<std::string> seen_;
};

}  // namespace dualtune
