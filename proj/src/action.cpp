#include "octwin/action.hpp"

#include <algorithm>
#include <cmath>

namespace octwin {

std::vector<Issue> validate(const Dtim& dtim, const Action& action) {
  std::vector<Issue> out;
  auto error = [&](std::string m) { out.push_back({Issue::Severity::error, std::move(m)}); };
  std::set<std::string> valves, transitions;
  for (const auto& e : action.edits) {
    if (const auto* sv = std::get_if<SetValve>(&e)) {
      const auto* v = dtim.valve(sv->valve);
      if (!v) error("action " + action.id + " sets undeclared valve " + sv->valve);
      else if (!v->domain.contains(sv->value))
        error("action " + action.id + " sets " + sv->valve + " to " + to_string(sv->value) + ", outside its domain");
      if (!valves.insert(sv->valve).second) error("action " + action.id + " edits valve " + sv->valve + " twice");
    } else {
      const auto& ao = std::get<AssignOperation>(e);
      if (!dtim.net().has_transition(ao.transition))
        error("action " + action.id + " assigns to unknown transition " + ao.transition);
      if (!dtim.operation(ao.operation)) error("action " + action.id + " assigns undeclared operation " + ao.operation);
      if (!transitions.insert(ao.transition).second)
        error("action " + action.id + " edits transition " + ao.transition + " twice");
    }
  }
  return out;
}

Configuration apply_action(const Dtim& dtim, const Action& action, const Configuration& conf) {
  Configuration out = conf;
  for (const auto& e : action.edits) {
    if (const auto* sv = std::get_if<SetValve>(&e)) {
      const auto* v = dtim.valve(sv->valve);
      if (!v) throw ActionError("undeclared valve " + sv->valve);
      if (!v->domain.contains(sv->value))
        throw DomainError("value " + to_string(sv->value) + " is outside the domain of " + sv->valve);
      out.valves[sv->valve] = sv->value;
    } else {
      const auto& ao = std::get<AssignOperation>(e);
      if (!dtim.net().has_transition(ao.transition)) throw ActionError("unknown transition " + ao.transition);
      if (!dtim.operation(ao.operation)) throw ActionError("undeclared operation " + ao.operation);
      out.operations[ao.transition] = ao.operation;
    }
  }
  return out;
}

EffectiveChange effective_change(const Dtim& dtim, const Action& action, const Configuration& at_start) {
  const auto after = apply_action(dtim, action, at_start);
  EffectiveChange c;
  for (const auto& e : action.edits) {
    if (const auto* sv = std::get_if<SetValve>(&e)) {
      auto before = at_start.valves.find(sv->valve);
      if (before == at_start.valves.end() || before->second != after.valves.at(sv->valve)) c.valves.insert(sv->valve);
    } else {
      const auto& t = std::get<AssignOperation>(e).transition;
      auto before = at_start.operations.find(t);
      if (before == at_start.operations.end() || before->second != after.operations.at(t)) c.transitions.insert(t);
    }
  }
  return c;
}

EffectiveChange touched_entries(const Action& action) {
  EffectiveChange c;
  for (const auto& e : action.edits) {
    if (const auto* sv = std::get_if<SetValve>(&e)) c.valves.insert(sv->valve);
    else c.transitions.insert(std::get<AssignOperation>(e).transition);
  }
  return c;
}

std::string to_string(InstanceStatus s) {
  switch (s) {
    case InstanceStatus::scheduled: return "scheduled";
    case InstanceStatus::active: return "active";
    case InstanceStatus::completed: return "completed";
  }
  return "?";
}

// MARK: - scheduler

Scheduler::Scheduler(std::shared_ptr<const Dtim> dtim, Configuration initial, Instant clock)
    : dtim_(std::move(dtim)), current_(std::move(initial)), clock_(clock) {
  history_.emplace_back(clock_, current_);
}

void Scheduler::define(Action action) {
  auto issues = validate(*dtim_, action);
  if (error_count(issues)) throw ActionError(issues.front().message);
  auto id = action.id;
  actions_[id] = std::move(action);
}

const Action* Scheduler::action(const std::string& id) const {
  auto it = actions_.find(id);
  return it == actions_.end() ? nullptr : &it->second;
}

ScheduleResult Scheduler::schedule(ActionInstance instance) {
  ScheduleResult r;
  if (instance.id.empty()) {
    r.reason = "action instance needs an id";
    return r;
  }
  if (entries_.count(instance.id)) {
    r.reason = "action instance " + instance.id + " already exists";
    return r;
  }
  const auto* act = action(instance.action);
  if (!act) {
    r.reason = "unknown action " + instance.action;
    return r;
  }
  if (!(instance.start < instance.end)) {
    r.reason = "start must precede end";
    return r;
  }
  if (!(instance.start > clock_)) {
    r.reason = "start must lie in the future of the twin clock";
    return r;
  }
  const auto mine = touched_entries(*act);
  for (const auto& [id, e] : entries_) {
    if (e.status == InstanceStatus::completed) continue;
    bool overlap = instance.start < e.instance.end && e.instance.start < instance.end;
    if (!overlap) continue;
    const auto theirs = touched_entries(actions_.at(e.instance.action));
    bool clash = std::any_of(mine.valves.begin(), mine.valves.end(), [&](auto& v) { return theirs.valves.count(v) > 0; }) ||
                 std::any_of(mine.transitions.begin(), mine.transitions.end(),
                             [&](auto& t) { return theirs.transitions.count(t) > 0; });
    if (clash) r.conflicts.push_back(id);
  }
  if (!r.conflicts.empty()) {
    r.reason = "overlaps with instances editing the same valve or transition";
    return r;
  }
  const std::string id = instance.id;
  entries_.emplace(id, Entry{std::move(instance), InstanceStatus::scheduled, {}, {}});
  r.accepted = true;
  return r;
}

std::optional<Instant> Scheduler::next_activation() const {
  std::optional<Instant> best;
  for (const auto& [_, e] : entries_) {
    std::optional<Instant> t;
    if (e.status == InstanceStatus::scheduled) t = e.instance.start;
    else if (e.status == InstanceStatus::active) t = e.instance.end;
    if (t && (!best || *t < *best)) best = t;
  }
  return best;
}

void Scheduler::advance_to(Instant t, const Hooks& hooks) {
  while (true) {
    auto next = next_activation();
    if (!next || *next > t) break;
    const Instant now = *next;
    clock_ = now;
    // Ends first so that back-to-back instances hand over cleanly.
    std::vector<Entry*> ending, starting;
    for (auto& [_, e] : entries_) {
      if (e.status == InstanceStatus::active && e.instance.end == now) ending.push_back(&e);
      if (e.status == InstanceStatus::scheduled && e.instance.start == now) starting.push_back(&e);
    }
    for (auto* e : ending) {
      for (const auto& v : e->change.valves) {
        auto it = e->snapshot.valves.find(v);
        if (it == e->snapshot.valves.end()) current_.valves.erase(v);
        else current_.valves[v] = it->second;
      }
      for (const auto& tr : e->change.transitions) {
        auto it = e->snapshot.operations.find(tr);
        if (it == e->snapshot.operations.end()) current_.operations.erase(tr);
        else current_.operations[tr] = it->second;
      }
      e->status = InstanceStatus::completed;
      history_.emplace_back(now, current_);
      if (hooks.on_end) hooks.on_end(e->instance, current_);
    }
    for (auto* e : starting) {
      const auto& act = actions_.at(e->instance.action);
      e->snapshot = current_;
      e->change = effective_change(*dtim_, act, current_);
      current_ = apply_action(*dtim_, act, current_);
      e->status = InstanceStatus::active;
      history_.emplace_back(now, current_);
      if (hooks.on_start) hooks.on_start(e->instance, e->snapshot, current_, e->change);
    }
  }
  if (t > clock_) clock_ = t;
}

std::vector<ActionInstance> Scheduler::instances() const {
  std::vector<ActionInstance> out;
  for (const auto& [_, e] : entries_) out.push_back(e.instance);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  return out;
}

const Scheduler::Entry& Scheduler::entry(const std::string& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw ActionError("unknown action instance " + id);
  return it->second;
}

const ActionInstance* Scheduler::instance(const std::string& id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second.instance;
}

InstanceStatus Scheduler::status(const std::string& id) const { return entry(id).status; }

std::optional<EffectiveChange> Scheduler::change_of(const std::string& id) const {
  const auto& e = entry(id);
  if (e.status == InstanceStatus::scheduled) return std::nullopt;
  return e.change;
}

// MARK: - JSON

Action action_from_json(const json& j) {
  if (!j.is_object() || !j.contains("id")) throw FormatError("action needs an \"id\"");
  Action a{j.at("id").get<std::string>(), {}};
  for (const auto& e : j.value("edits", json::array())) {
    if (e.contains("set_valve")) {
      const auto& sv = e.at("set_valve");
      a.edits.push_back(SetValve{sv.at("valve").get<std::string>(), value_from_json(sv.at("value"))});
    } else if (e.contains("assign_operation")) {
      const auto& ao = e.at("assign_operation");
      a.edits.push_back(AssignOperation{ao.at("transition").get<std::string>(), ao.at("operation").get<std::string>()});
    } else {
      throw FormatError("unknown edit in action " + a.id + ": " + e.dump());
    }
  }
  return a;
}

json to_json(const Action& a) {
  json edits = json::array();
  for (const auto& e : a.edits) {
    if (const auto* sv = std::get_if<SetValve>(&e))
      edits.push_back({{"set_valve", {{"valve", sv->valve}, {"value", to_json(sv->value)}}}});
    else {
      const auto& ao = std::get<AssignOperation>(e);
      edits.push_back({{"assign_operation", {{"transition", ao.transition}, {"operation", ao.operation}}}});
    }
  }
  return {{"id", a.id}, {"edits", edits}};
}

Instant instant_from_json(const json& j, const StepClock& clock) {
  if (j.is_number_integer()) return clock.at(j.get<long long>());
  if (j.is_number()) {
    double step = j.get<double>();
    if (step != std::floor(step)) throw FormatError("time steps must be integers");
    return clock.at(static_cast<long long>(step));
  }
  if (j.is_string()) {
    try {
      return parse_rfc3339(j.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw FormatError(e.what());
    }
  }
  throw FormatError("time must be an RFC3339 string or an integer step");
}

ActionInstance action_instance_from_json(const json& j, const StepClock& clock) {
  if (!j.is_object()) throw FormatError("action instance must be an object");
  for (const char* k : {"action", "start", "end"})
    if (!j.contains(k)) throw FormatError(std::string("action instance needs \"") + k + "\"");
  ActionInstance ai;
  ai.action = j.at("action").get<std::string>();
  ai.id = j.value("id", std::string{});
  ai.start = instant_from_json(j.at("start"), clock);
  ai.end = instant_from_json(j.at("end"), clock);
  return ai;
}

json to_json(const ActionInstance& ai, const StepClock* steps) {
  json j = {{"id", ai.id}, {"action", ai.action}, {"start", format_rfc3339(ai.start)}, {"end", format_rfc3339(ai.end)}};
  if (steps) {
    j["start_step"] = steps->step_of(ai.start);
    j["end_step"] = steps->step_of(ai.end);
  }
  return j;
}

json to_json(const EffectiveChange& c) { return {{"valves", c.valves}, {"transitions", c.transitions}}; }

json history_to_json(const std::vector<std::pair<Instant, Configuration>>& history, const StepClock* steps) {
  json out = json::array();
  for (const auto& [t, c] : history) {
    json j = json::object();
    const bool initial = t == Instant::min();
    j["at"] = initial ? json(nullptr) : json(format_rfc3339(t));
    if (steps && !initial) j["step"] = steps->step_of(t);
    j["configuration"] = to_json(c);
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace octwin
