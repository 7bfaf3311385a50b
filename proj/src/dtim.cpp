#include "octwin/dtim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace octwin {

namespace {
const std::set<std::string> kNoAttributes;
const guard::Formula kTrue = guard::Formula::truth();
}  // namespace

bool ValveDomain::contains(const Value& v) const {
  if (kind == Kind::enumerated) return std::find(values.begin(), values.end(), v) != values.end();
  if (!is_number(v)) return false;
  double x = std::get<double>(v);
  return x >= min && x <= max;
}

WriteSet normalized(WriteSet w) {
  std::erase_if(w, [](const auto& kv) { return kv.second.empty(); });
  return w;
}

const std::set<std::string>& Operation::written(const ObjectType& type) const {
  auto it = writes.find(type);
  return it == writes.end() ? kNoAttributes : it->second;
}

Dtim::Dtim(Net net, std::vector<Valve> valves, std::set<std::string> attributes,
           std::map<TransitionId, guard::Formula> guards, std::vector<Operation> operations)
    : net_(std::move(net)), valves_(std::move(valves)), attributes_(std::move(attributes)), guards_(std::move(guards)) {
  std::set<std::string> names;
  for (const auto& v : valves_)
    if (!names.insert(v.name).second) throw StructuralError("duplicate valve " + v.name);
  for (auto& op : operations) {
    auto id = op.id;
    if (!operations_.emplace(id, std::move(op)).second) throw StructuralError("duplicate operation " + id);
  }
}

const Valve* Dtim::valve(const std::string& name) const {
  for (const auto& v : valves_)
    if (v.name == name) return &v;
  return nullptr;
}

const Operation* Dtim::operation(const std::string& id) const {
  auto it = operations_.find(id);
  return it == operations_.end() ? nullptr : &it->second;
}

const guard::Formula& Dtim::guard(const TransitionId& t) const {
  auto it = guards_.find(t);
  return it == guards_.end() ? kTrue : it->second;
}

WriteSet assigned_writes(const Dtim& dtim, const Configuration& conf, const TransitionId& t) {
  auto it = conf.operations.find(t);
  if (it == conf.operations.end()) return {};
  const auto* op = dtim.operation(it->second);
  return op ? normalized(op->writes) : WriteSet{};
}

// MARK: - diagnostics keys

std::string to_string(DiagnosticKind k) {
  switch (k) {
    case DiagnosticKind::avg_total_service_time_of_object_type: return "avg_total_service_time_of_object_type";
    case DiagnosticKind::avg_sojourn_time_of_transition: return "avg_sojourn_time_of_transition";
    case DiagnosticKind::avg_waiting_time_of_transition: return "avg_waiting_time_of_transition";
    case DiagnosticKind::count_of_executions_of_transition: return "count_of_executions_of_transition";
    case DiagnosticKind::count_of_objects_of_type: return "count_of_objects_of_type";
  }
  return "?";
}

DiagnosticKind diagnostic_kind_from_string(const std::string& s) {
  for (auto k : {DiagnosticKind::avg_total_service_time_of_object_type, DiagnosticKind::avg_sojourn_time_of_transition,
                 DiagnosticKind::avg_waiting_time_of_transition, DiagnosticKind::count_of_executions_of_transition,
                 DiagnosticKind::count_of_objects_of_type})
    if (to_string(k) == s) return k;
  throw FormatError("unknown diagnostic kind " + s);
}

bool targets_object_type(DiagnosticKind k) {
  return k == DiagnosticKind::avg_total_service_time_of_object_type || k == DiagnosticKind::count_of_objects_of_type;
}

std::string to_string(const DiagnosticKey& k) {
  return to_string(k.kind) + "(" + k.target + ", " + std::to_string(k.window.count() / 1000) + "s)";
}

std::optional<double> diagnostics_lookup(const OperationalState& state, const DiagnosticKey& key) {
  auto it = state.diagnostics.find(key);
  if (it == state.diagnostics.end()) return std::nullopt;
  return it->second;
}

// MARK: - validation

std::size_t error_count(const std::vector<Issue>& issues) {
  return static_cast<std::size_t>(std::count_if(issues.begin(), issues.end(), [](const Issue& i) { return i.is_error(); }));
}

std::vector<Issue> validate(const Dtim& dtim) {
  std::vector<Issue> out;
  auto error = [&](std::string m) { out.push_back({Issue::Severity::error, std::move(m)}); };
  auto warn = [&](std::string m) { out.push_back({Issue::Severity::warning, std::move(m)}); };
  const auto& net = dtim.net();
  const auto types = net.object_types();

  for (const auto& v : dtim.valves()) {
    if (v.domain.kind == ValveDomain::Kind::range && v.domain.min > v.domain.max)
      error("valve " + v.name + " has an empty range");
    if (v.domain.kind == ValveDomain::Kind::enumerated && v.domain.values.empty())
      error("valve " + v.name + " has no admissible values");
  }
  for (const auto& [t, g] : dtim.guards()) {
    if (!net.has_transition(t)) {
      error("guard for unknown transition " + t);
      continue;
    }
    for (const auto& v : guard::referenced_valves(g))
      if (!dtim.valve(v)) error("guard of " + t + " references undeclared valve " + v);
    std::set<ObjectType> guard_types;
    const auto adjacent = net.surrounding_types(t);
    for (const auto& [type, attr] : guard::referenced_attributes(g)) {
      guard_types.insert(type);
      if (!types.count(type)) error("guard of " + t + " references unknown object type " + type);
      else if (!adjacent.count(type)) warn("guard of " + t + " reads " + type + ", which is not adjacent to it");
      if (attr != "id" && !dtim.attributes().count(attr))
        error("guard of " + t + " references undeclared attribute " + attr);
    }
    if (guard_types.size() > 1) warn("guard of " + t + " mixes attributes of several object types");
  }
  for (const auto& [id, op] : dtim.operations()) {
    for (const auto& [type, attrs] : op.writes) {
      if (!types.count(type)) error("operation " + id + " writes unknown object type " + type);
      for (const auto& a : attrs)
        if (!dtim.attributes().count(a)) error("operation " + id + " writes undeclared attribute " + a);
    }
  }
  return out;
}

std::vector<Issue> validate(const Dtim& dtim, const Configuration& conf) {
  std::vector<Issue> out;
  auto error = [&](std::string m) { out.push_back({Issue::Severity::error, std::move(m)}); };
  for (const auto& v : dtim.valves()) {
    auto it = conf.valves.find(v.name);
    if (it == conf.valves.end()) error("configuration leaves valve " + v.name + " unassigned");
    else if (!v.domain.contains(it->second))
      error("value " + to_string(it->second) + " of valve " + v.name + " is outside its domain");
  }
  for (const auto& [name, _] : conf.valves)
    if (!dtim.valve(name)) error("configuration assigns undeclared valve " + name);
  for (const auto& [t, op] : conf.operations) {
    if (!dtim.net().has_transition(t)) error("configuration assigns an operation to unknown transition " + t);
    if (!dtim.operation(op)) error("configuration assigns undeclared operation " + op);
  }
  return out;
}

std::vector<Issue> validate(const Dtim& dtim, const DiagnosticKey& key) {
  std::vector<Issue> out;
  bool ok = targets_object_type(key.kind) ? dtim.net().object_types().count(key.target) != 0
                                          : dtim.net().has_transition(key.target);
  if (!ok) out.push_back({Issue::Severity::warning, "diagnostic " + to_string(key) + " targets the wrong kind of entity"});
  if (key.window <= Millis{0}) out.push_back({Issue::Severity::error, "diagnostic " + to_string(key) + " has no window"});
  return out;
}

// MARK: - digital twin bindings

guard::EvaluationContext guard_context(const Configuration& conf, const OperationalState& state, const Binding& b) {
  guard::EvaluationContext ctx;
  ctx.valves = conf.valves;
  for (const auto& [type, ids] : b.objects) {
    auto& list = ctx.bound_objects[type];
    for (const auto& id : ids) {
      auto it = state.object_values.find(id);
      list.push_back({id, it == state.object_values.end() ? AttributeMap{} : it->second});
    }
  }
  return ctx;
}

Enablement is_dt_binding_enabled(const Dtim& dtim, const Configuration& conf, const OperationalState& state,
                                 const DtBinding& dtb) {
  const auto& b = dtb.binding;
  try {
    if (!is_binding_enabled(dtim.net(), state.marking, b)) return {false, "binding is not enabled in the marking"};
  } catch (const StructuralError& e) {
    return {false, e.what()};
  }
  try {
    if (!guard::evaluate(dtim.guard(b.transition), guard_context(conf, state, b)))
      return {false, "guard of " + b.transition + " evaluates to false"};
  } catch (const guard::EvaluationError& e) {
    return {false, std::string("guard of ") + b.transition + " cannot be evaluated: " + e.what()};
  }
  if (normalized(dtb.write) != assigned_writes(dtim, conf, b.transition))
    return {false, "write function differs from the operation assigned to " + b.transition};
  return {true, {}};
}

OperationalState apply_dt_binding(const Dtim& dtim, const Configuration& conf, const OperationalState& state,
                                  const DtBinding& dtb, const std::map<ObjectId, AttributeMap>& written_values) {
  auto en = is_dt_binding_enabled(dtim, conf, state, dtb);
  if (!en) throw EnablementError(en.reason);
  const auto& b = dtb.binding;
  for (const auto& [oi, attrs] : written_values) {
    const ObjectType* type = nullptr;
    for (const auto& [t, ids] : b.objects)
      if (ids.count(oi)) type = &t;
    if (!type) throw WriteViolation("object " + oi + " is not part of the binding");
    auto allowed = dtb.write.find(*type);
    for (const auto& [attr, _] : attrs)
      if (allowed == dtb.write.end() || !allowed->second.count(attr))
        throw WriteViolation("attribute " + attr + " of " + oi + " is outside the write set");
  }
  OperationalState out = state;
  out.marking = fire(dtim.net(), state.marking, b);
  for (const auto& [oi, attrs] : written_values)
    for (const auto& [attr, v] : attrs) out.object_values[oi][attr] = v;
  return out;
}

// MARK: - JSON

namespace {

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(where + ": missing \"" + key + "\"");
  return j.at(key);
}

std::string require_string(const json& j, const char* key, const std::string& where) {
  const auto& v = require(j, key, where);
  if (!v.is_string()) throw FormatError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

ValveDomain domain_from_json(const json& j, const std::string& where) {
  ValveDomain d;
  if (j.is_null()) {
    d.min = -std::numeric_limits<double>::infinity();
    d.max = std::numeric_limits<double>::infinity();
    return d;
  }
  if (j.contains("values")) {
    d.kind = ValveDomain::Kind::enumerated;
    for (const auto& v : j.at("values")) d.values.push_back(value_from_json(v));
    return d;
  }
  d.min = j.value("min", -std::numeric_limits<double>::infinity());
  d.max = j.value("max", std::numeric_limits<double>::infinity());
  if (j.contains("min") && !j.at("min").is_number()) throw FormatError(where + ".min: expected a number");
  return d;
}

json to_json(const ValveDomain& d) {
  json j = json::object();
  if (d.kind == ValveDomain::Kind::enumerated) {
    j["values"] = json::array();
    for (const auto& v : d.values) j["values"].push_back(octwin::to_json(v));
  } else {
    if (std::isfinite(d.min)) j["min"] = d.min;
    if (std::isfinite(d.max)) j["max"] = d.max;
  }
  return j;
}

WriteSet writes_from_json(const json& j, const std::string& where) {
  WriteSet w;
  if (j.is_null()) return w;
  if (!j.is_object()) throw FormatError(where + ": expected an object");
  for (const auto& [type, attrs] : j.items()) {
    auto& s = w[type];
    for (const auto& a : attrs) s.insert(a.get<std::string>());
  }
  return w;
}

json to_json(const WriteSet& w) {
  json j = json::object();
  for (const auto& [type, attrs] : w) j[type] = attrs;
  return j;
}

}  // namespace

Dtim dtim_from_json(const json& doc) {
  if (!doc.is_object()) throw FormatError("DT-IM document must be an object");
  for (const char* member : {"places", "transitions", "arcs"})
    if (!doc.contains(member) || !doc.at(member).is_array())
      throw FormatError(std::string("DT-IM document needs an array \"") + member + "\"");
  std::vector<Place> places;
  for (const auto& p : doc.value("places", json::array()))
    places.push_back({require_string(p, "id", "places[]"), require_string(p, "object_type", "places[]")});
  std::vector<Transition> transitions;
  for (const auto& t : doc.value("transitions", json::array())) {
    Transition tr{require_string(t, "id", "transitions[]"), std::nullopt};
    if (t.contains("label") && t.at("label").is_string()) tr.label = t.at("label").get<std::string>();
    transitions.push_back(std::move(tr));
  }
  std::vector<Arc> arcs;
  for (const auto& a : doc.value("arcs", json::array()))
    arcs.push_back({require_string(a, "source", "arcs[]"), require_string(a, "target", "arcs[]"), a.value("variable", false)});
  std::vector<Valve> valves;
  for (const auto& v : doc.value("valves", json::array())) {
    auto name = require_string(v, "name", "valves[]");
    valves.push_back({name, domain_from_json(v.value("domain", json()), "valves." + name + ".domain")});
  }
  std::set<std::string> attributes;
  for (const auto& a : doc.value("attributes", json::array())) attributes.insert(a.get<std::string>());
  std::map<TransitionId, guard::Formula> guards;
  const json members_guards = doc.value("guards", json::object());
  for (const auto& [t, text] : members_guards.items()) {
    try {
      guards.emplace(t, guard::parse(text.get<std::string>()));
    } catch (const guard::SyntaxError& e) {
      throw FormatError("guards." + t + ": " + e.what());
    }
  }
  std::vector<Operation> ops;
  for (const auto& o : doc.value("operations", json::array())) {
    auto id = require_string(o, "id", "operations[]");
    ops.push_back({id, writes_from_json(o.value("writes", json()), "operations." + id + ".writes")});
  }
  return Dtim(Net(std::move(places), std::move(transitions), std::move(arcs)), std::move(valves),
              std::move(attributes), std::move(guards), std::move(ops));
}

json to_json(const Dtim& dtim) {
  json doc = json::object();
  doc["places"] = json::array();
  for (const auto& p : dtim.net().places()) doc["places"].push_back({{"id", p.id}, {"object_type", p.object_type}});
  doc["transitions"] = json::array();
  for (const auto& t : dtim.net().transitions()) {
    json jt = {{"id", t.id}};
    jt["label"] = t.label ? json(*t.label) : json();
    doc["transitions"].push_back(jt);
  }
  doc["arcs"] = json::array();
  for (const auto& a : dtim.net().arcs())
    doc["arcs"].push_back({{"source", a.source}, {"target", a.target}, {"variable", a.variable}});
  doc["valves"] = json::array();
  for (const auto& v : dtim.valves()) doc["valves"].push_back({{"name", v.name}, {"domain", to_json(v.domain)}});
  doc["attributes"] = dtim.attributes();
  doc["guards"] = json::object();
  for (const auto& [t, g] : dtim.guards()) doc["guards"][t] = guard::to_string(g);
  doc["operations"] = json::array();
  for (const auto& [id, op] : dtim.operations()) doc["operations"].push_back({{"id", id}, {"writes", to_json(op.writes)}});
  return doc;
}

std::optional<Configuration> default_configuration(const json& doc) {
  if (!doc.is_object() || !doc.contains("configuration")) return std::nullopt;
  return configuration_from_json(doc.at("configuration"));
}

Configuration configuration_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("configuration must be an object");
  Configuration c;
  const json members_valves = j.value("valves", json::object());
  for (const auto& [k, v] : members_valves.items()) c.valves[k] = value_from_json(v);
  const json members_operations = j.value("operations", json::object());
  for (const auto& [k, v] : members_operations.items()) c.operations[k] = v.get<std::string>();
  return c;
}

json to_json(const Configuration& conf) {
  json j = json::object();
  j["valves"] = json::object();
  for (const auto& [k, v] : conf.valves) j["valves"][k] = to_json(v);
  j["operations"] = json::object();
  for (const auto& [k, v] : conf.operations) j["operations"][k] = v;
  return j;
}

Millis duration_from_json(const json& j) {
  if (j.is_number()) return from_seconds(j.get<double>());
  if (!j.is_string()) throw FormatError("duration must be seconds or a string like \"7d\"");
  auto s = j.get<std::string>();
  if (s.empty()) throw FormatError("empty duration");
  char unit = s.back();
  double factor = 1;
  switch (unit) {
    case 'd': factor = 86400; break;
    case 'h': factor = 3600; break;
    case 'm': factor = 60; break;
    case 's': factor = 1; break;
    default: throw FormatError("unknown duration unit in " + s);
  }
  try {
    return from_seconds(std::stod(s.substr(0, s.size() - 1)) * factor);
  } catch (const std::exception&) {
    throw FormatError("bad duration " + s);
  }
}

DiagnosticKey diagnostic_key_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("diagnostic key must be an object");
  return {diagnostic_kind_from_string(require_string(j, "kind", "diagnostic")),
          require_string(j, "target", "diagnostic"), duration_from_json(require(j, "window", "diagnostic"))};
}

json to_json(const DiagnosticKey& k) {
  return {{"kind", to_string(k.kind)}, {"target", k.target}, {"window", to_seconds(k.window)}};
}

}  // namespace octwin
