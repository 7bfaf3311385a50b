#pragma once

#include <map>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

namespace octwin {

// Attribute and valve values. Numbers are doubles; equality is exact.
using Value = std::variant<double, std::string>;
using AttributeMap = std::map<std::string, Value>;

inline bool is_number(const Value& v) { return std::holds_alternative<double>(v); }

std::string to_string(const Value& v);

nlohmann::ordered_json to_json(const Value& v);
/// Accepts numbers and strings; booleans map to 1/0. Anything else throws.
Value value_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json to_json(const AttributeMap& m);
AttributeMap attributes_from_json(const nlohmann::ordered_json& j);

}  // namespace octwin
