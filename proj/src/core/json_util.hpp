#pragma once

#include <initializer_list>
#include <string>

#include "core/error.hpp"
#include "json.hpp"

namespace mmvm::json_util {

// Rejects missing required keys and any key outside required+optional.
inline void expect_keys(const nlohmann::json& j, std::initializer_list<const char*> required,
                        std::initializer_list<const char*> optional, const char* what) {
  if (!j.is_object()) throw ParseError(std::string(what) + " must be an object");
  for (const char* k : required) {
    if (!j.contains(k)) throw ParseError(std::string(what) + " is missing '" + k + "'");
  }
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* k : required) known = known || key == k;
    for (const char* k : optional) known = known || key == k;
    if (!known) throw ParseError(std::string(what) + " has unknown key '" + key + "'");
  }
}

inline std::string as_string(const nlohmann::json& j, const char* what) {
  if (!j.is_string()) throw ParseError(std::string(what) + " must be a string");
  return j.get<std::string>();
}

inline std::string get_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("missing '") + key + "'");
  return as_string(j.at(key), key);
}

inline int as_int(const nlohmann::json& j, const char* what) {
  if (!j.is_number_integer()) throw ParseError(std::string(what) + " must be an integer");
  return j.get<int>();
}

inline double as_double(const nlohmann::json& j, const char* what) {
  if (!j.is_number()) throw ParseError(std::string(what) + " must be a number");
  return j.get<double>();
}

}  // namespace mmvm::json_util
