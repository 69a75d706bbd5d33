#pragma once

// Typed field access over nlohmann::json that reports failures as
// FormatError with a dotted/indexed location.

#include <cmath>
#include <cstdint>
#include <limits>
#include <nlohmann/json.hpp>
#include <string>

#include "itemgrad/errors.hpp"
#include "itemgrad/utf8.hpp"

namespace itemgrad::detail {

using Json = nlohmann::ordered_json;

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline std::string index_path(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

inline const Json& require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) throw FormatError(path, "expected an object");
  return j;
}

inline const Json& require_array(const Json& j, const std::string& path) {
  if (!j.is_array()) throw FormatError(path, "expected an array");
  return j;
}

inline const Json& field(const Json& obj, const char* key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw FormatError(join(path, key), "missing field");
  return *it;
}

inline std::uint64_t as_uint(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw FormatError(path, "expected a non-negative integer");
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  const auto v = j.get<std::int64_t>();
  if (v < 0) throw FormatError(path, "expected a non-negative integer");
  return static_cast<std::uint64_t>(v);
}

inline std::size_t as_size(const Json& j, const std::string& path) {
  const auto v = as_uint(j, path);
  if (v > std::numeric_limits<std::size_t>::max() / 2) throw FormatError(path, "integer too large");
  return static_cast<std::size_t>(v);
}

inline double as_finite(const Json& j, const std::string& path) {
  if (!j.is_number()) throw FormatError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw FormatError(path, "expected a finite number");
  return v;
}

inline const std::string& as_string(const Json& j, const std::string& path) {
  if (!j.is_string()) throw FormatError(path, "expected a string");
  return j.get_ref<const std::string&>();
}

inline std::u32string as_text(const Json& j, const std::string& path) {
  try {
    return utf8::decode(as_string(j, path));
  } catch (const FormatError& e) {
    throw FormatError(path, e.what());
  }
}

inline Json parse_json(std::string_view bytes) {
  try {
    return Json::parse(bytes.begin(), bytes.end());
  } catch (const Json::exception& e) {
    throw FormatError("", std::string("malformed JSON: ") + e.what());
  }
}

inline std::string dump_json(const Json& j) {
  return j.dump(-1, ' ', false, Json::error_handler_t::strict) + "\n";
}

}  // namespace itemgrad::detail
