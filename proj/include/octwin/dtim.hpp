#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "octwin/guard.hpp"
#include "octwin/ocpn.hpp"
#include "octwin/time.hpp"
#include "octwin/value.hpp"

namespace octwin {

using json = nlohmann::ordered_json;

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct WriteViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValveDomain {
  enum class Kind { range, enumerated };
  Kind kind = Kind::range;
  double min = 0;
  double max = 0;
  std::vector<Value> values;  // enumerated only

  bool contains(const Value& v) const;
};

struct Valve {
  std::string name;
  ValveDomain domain;
};

using WriteSet = std::map<ObjectType, std::set<std::string>>;

/// Drops object types mapped to the empty set, so that an explicit empty
/// entry and an absent one compare equal.
WriteSet normalized(WriteSet w);

struct Operation {
  std::string id;
  WriteSet writes;

  const std::set<std::string>& written(const ObjectType& type) const;
};

// Digital twin interface model: net, valves, attributes, guards, operations.
class Dtim {
 public:
  Dtim() = default;
  Dtim(Net net, std::vector<Valve> valves, std::set<std::string> attributes,
       std::map<TransitionId, guard::Formula> guards, std::vector<Operation> operations);

  const Net& net() const { return net_; }
  const std::vector<Valve>& valves() const { return valves_; }
  const std::set<std::string>& attributes() const { return attributes_; }
  const std::map<TransitionId, guard::Formula>& guards() const { return guards_; }
  const std::map<std::string, Operation>& operations() const { return operations_; }

  const Valve* valve(const std::string& name) const;
  const Operation* operation(const std::string& id) const;
  /// TrueLiteral for transitions without a guard entry.
  const guard::Formula& guard(const TransitionId& t) const;

 private:
  Net net_;
  std::vector<Valve> valves_;
  std::set<std::string> attributes_;
  std::map<TransitionId, guard::Formula> guards_;
  std::map<std::string, Operation> operations_;
};

struct Configuration {
  std::map<std::string, Value> valves;
  std::map<TransitionId, std::string> operations;  // transitions without entry write nothing

  bool operator==(const Configuration&) const = default;
};

/// Write set of the operation `conf` assigns to `t` (empty if none).
WriteSet assigned_writes(const Dtim& dtim, const Configuration& conf, const TransitionId& t);

enum class DiagnosticKind {
  avg_total_service_time_of_object_type,
  avg_sojourn_time_of_transition,
  avg_waiting_time_of_transition,
  count_of_executions_of_transition,
  count_of_objects_of_type,
};

std::string to_string(DiagnosticKind k);
DiagnosticKind diagnostic_kind_from_string(const std::string& s);
bool targets_object_type(DiagnosticKind k);

struct DiagnosticKey {
  DiagnosticKind kind;
  std::string target;  // object type or transition id, per kind
  Millis window;

  auto operator<=>(const DiagnosticKey&) const = default;
};

std::string to_string(const DiagnosticKey& k);

struct OperationalState {
  Marking marking;
  std::map<ObjectId, AttributeMap> object_values;
  std::map<DiagnosticKey, double> diagnostics;
};

/// nullopt when the key is outside the diagnostics domain; never 0 by default.
std::optional<double> diagnostics_lookup(const OperationalState& state, const DiagnosticKey& key);

struct DtBinding {
  Binding binding;
  WriteSet write;
  Instant timestamp;
};

struct Issue {
  enum class Severity { error, warning };
  Severity severity;
  std::string message;

  bool is_error() const { return severity == Severity::error; }
};

std::size_t error_count(const std::vector<Issue>& issues);

std::vector<Issue> validate(const Dtim& dtim);
std::vector<Issue> validate(const Dtim& dtim, const Configuration& conf);
std::vector<Issue> validate(const Dtim& dtim, const DiagnosticKey& key);

struct Enablement {
  bool enabled = false;
  std::string reason;

  explicit operator bool() const { return enabled; }
};

/// Guard context for `b`: the configuration's valves plus the bound objects'
/// attribute values.
guard::EvaluationContext guard_context(const Configuration& conf, const OperationalState& state,
                                       const Binding& b);

Enablement is_dt_binding_enabled(const Dtim& dtim, const Configuration& conf, const OperationalState& state,
                                 const DtBinding& dtb);

/// Fires the binding and merges `written_values`. Throws EnablementError if
/// not enabled and WriteViolation if a value falls outside `dtb.write`.
OperationalState apply_dt_binding(const Dtim& dtim, const Configuration& conf, const OperationalState& state,
                                  const DtBinding& dtb, const std::map<ObjectId, AttributeMap>& written_values);

// JSON documents

Dtim dtim_from_json(const json& doc);
json to_json(const Dtim& dtim);
/// The optional "configuration" member of a DT-IM document.
std::optional<Configuration> default_configuration(const json& doc);

Configuration configuration_from_json(const json& j);
json to_json(const Configuration& conf);

DiagnosticKey diagnostic_key_from_json(const json& j);
json to_json(const DiagnosticKey& k);

Millis duration_from_json(const json& j);  // seconds as a number, or "7d" / "36h" / "15m" / "20s"

}  // namespace octwin
