#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "octwin/dtim.hpp"

namespace octwin {

struct ActionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : ActionError {
  using ActionError::ActionError;
};

struct SetValve {
  std::string valve;
  Value value;
  bool operator==(const SetValve&) const = default;
};

struct AssignOperation {
  TransitionId transition;
  std::string operation;
  bool operator==(const AssignOperation&) const = default;
};

using Edit = std::variant<SetValve, AssignOperation>;

struct Action {
  std::string id;
  std::vector<Edit> edits;
};

struct ActionInstance {
  std::string id;
  std::string action;
  Instant start;
  Instant end;
};

struct EffectiveChange {
  std::set<std::string> valves;
  std::set<TransitionId> transitions;

  bool empty() const { return valves.empty() && transitions.empty(); }
  bool operator==(const EffectiveChange&) const = default;
};

std::vector<Issue> validate(const Dtim& dtim, const Action& action);

/// Throws ActionError for edits naming undeclared entities and DomainError
/// for valve values outside their domain.
Configuration apply_action(const Dtim& dtim, const Action& action, const Configuration& conf);

/// Valves and transitions whose assignment differs after applying `action`
/// to `at_start`.
EffectiveChange effective_change(const Dtim& dtim, const Action& action, const Configuration& at_start);

/// Valves and transitions an action edits, whether or not the edit changes
/// anything.
EffectiveChange touched_entries(const Action& action);

enum class InstanceStatus { scheduled, active, completed };
std::string to_string(InstanceStatus s);

struct ScheduleResult {
  bool accepted = false;
  std::string reason;
  std::vector<std::string> conflicts;  // ids of clashing instances
  std::string instance;                // id of the accepted instance

  explicit operator bool() const { return accepted; }
};

// Owns the action timeline. Starts apply the action to a snapshot of the live
// configuration; ends restore the snapshot values of exactly the effective
// change. Activations at the same instant run ends first, then starts.
class Scheduler {
 public:
  struct Hooks {
    std::function<void(const ActionInstance&, const Configuration& before, const Configuration& after,
                       const EffectiveChange&)>
        on_start;
    std::function<void(const ActionInstance&, const Configuration& restored)> on_end;
  };

  Scheduler(std::shared_ptr<const Dtim> dtim, Configuration initial, Instant clock = Instant::min());

  /// Throws ActionError if the action does not validate against the model.
  void define(Action action);
  const Action* action(const std::string& id) const;
  const std::map<std::string, Action>& actions() const { return actions_; }

  ScheduleResult schedule(ActionInstance instance);

  /// Runs every activation with time <= t, then moves the clock to t.
  void advance_to(Instant t, const Hooks& hooks = {});
  std::optional<Instant> next_activation() const;

  Instant clock() const { return clock_; }
  const Dtim& dtim() const { return *dtim_; }
  const Configuration& configuration() const { return current_; }
  const std::vector<std::pair<Instant, Configuration>>& history() const { return history_; }

  std::vector<ActionInstance> instances() const;
  const ActionInstance* instance(const std::string& id) const;
  InstanceStatus status(const std::string& id) const;
  std::optional<EffectiveChange> change_of(const std::string& id) const;

 private:
  struct Entry {
    ActionInstance instance;
    InstanceStatus status = InstanceStatus::scheduled;
    Configuration snapshot;
    EffectiveChange change;
  };

  const Entry& entry(const std::string& id) const;

  std::shared_ptr<const Dtim> dtim_;
  Configuration current_;
  Instant clock_;
  std::map<std::string, Action> actions_;
  std::map<std::string, Entry> entries_;
  std::vector<std::pair<Instant, Configuration>> history_;
};

// JSON: {"id", "edits": [{"set_valve": {"valve", "value"}} | {"assign_operation": {"transition", "operation"}}]}
Action action_from_json(const json& j);
json to_json(const Action& a);

/// {"id", "action", "start", "end"}; times are RFC3339 strings or integer steps of `clock`.
ActionInstance action_instance_from_json(const json& j, const StepClock& clock);
json to_json(const ActionInstance& ai, const StepClock* steps = nullptr);
json to_json(const EffectiveChange& c);
/// Configuration history as [{at, step, configuration}]; the initial entry has at = null.
json history_to_json(const std::vector<std::pair<Instant, Configuration>>& history, const StepClock* steps = nullptr);

/// RFC3339 string or step number on `clock`.
Instant instant_from_json(const json& j, const StepClock& clock);

}  // namespace octwin
