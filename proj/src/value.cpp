#include "octwin/value.hpp"

#include <sstream>
#include <stdexcept>

namespace octwin {

std::string to_string(const Value& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  std::ostringstream os;
  os.precision(17);
  os << std::get<double>(v);
  return os.str();
}

nlohmann::ordered_json to_json(const Value& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return std::get<double>(v);
}

Value value_from_json(const nlohmann::ordered_json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  if (j.is_boolean()) return j.get<bool>() ? 1.0 : 0.0;
  throw std::invalid_argument("unsupported attribute value: " + j.dump());
}

nlohmann::ordered_json to_json(const AttributeMap& m) {
  auto out = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m) out[k] = to_json(v);
  return out;
}

AttributeMap attributes_from_json(const nlohmann::ordered_json& j) {
  AttributeMap m;
  if (j.is_null()) return m;
  if (!j.is_object()) throw std::invalid_argument("attribute map must be an object");
  for (const auto& [k, v] : j.items()) {
    if (v.is_null()) continue;
    m.emplace(k, value_from_json(v));
  }
  return m;
}

}  // namespace octwin
