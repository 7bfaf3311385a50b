#include "octwin/replay.hpp"

#include <algorithm>

namespace octwin::replay {

std::string to_string(DeviationKind k) {
  switch (k) {
    case DeviationKind::missing_token: return "missing_token";
    case DeviationKind::unknown_activity: return "unknown_activity";
    case DeviationKind::guard_violation: return "guard_violation";
    case DeviationKind::write_violation: return "write_violation";
    case DeviationKind::invalid_binding: return "invalid_binding";
  }
  return "?";
}

json to_json(const Deviation& d) {
  return {{"event", d.event}, {"transition", d.transition}, {"object", d.object}, {"kind", to_string(d.kind)},
          {"detail", d.detail}};
}

void WindowedStat::add(Instant t, Millis v) {
  samples_.emplace_back(t, v);
  sum_ += v;
}

void WindowedStat::evict_before(Instant cutoff) {
  while (!samples_.empty() && samples_.front().first < cutoff) {
    sum_ -= samples_.front().second;
    samples_.pop_front();
  }
}

Replayer::Replayer(std::shared_ptr<const Dtim> dtim, Millis retention)
    : dtim_(std::move(dtim)), retention_(retention) {}

void Replayer::register_object(const ocel::ObjectRecord& object) {
  auto [it, fresh] = declared_.emplace(object.id, object);
  if (!fresh && !born_.count(object.id))
    for (const auto& [k, v] : object.attributes) it->second.attributes[k] = v;
}

std::optional<ObjectType> Replayer::type_of(const ObjectId& id) const {
  auto it = declared_.find(id);
  if (it == declared_.end()) return std::nullopt;
  return it->second.type;
}

std::vector<Deviation> Replayer::replay_event(const Configuration& conf, const ocel::Event& e) {
  std::vector<Deviation> dev;
  auto note = [&](const TransitionId& t, const ObjectId& o, DeviationKind k, std::string detail) {
    dev.push_back({e.id, t, o, k, std::move(detail)});
  };
  if (clock_ && e.timestamp < *clock_)
    throw OutOfOrderError("event " + e.id + " at " + format_rfc3339(e.timestamp) + " precedes the replay clock " +
                          format_rfc3339(*clock_));
  clock_ = e.timestamp;
  collect_garbage(e.timestamp);

  const auto& net = dtim_->net();
  const Transition* tr = net.find_by_label(e.activity);
  if (!tr) {
    note("", "", DeviationKind::unknown_activity, "no transition is labelled '" + e.activity + "'");
    deviation_count_ += dev.size();
    return dev;
  }
  const auto& t = tr->id;
  const auto surrounding = net.surrounding_types(t);

  Binding b{t, {}};
  for (const auto& oi : e.objects) {
    auto type = type_of(oi);
    if (!type) {
      note(t, oi, DeviationKind::invalid_binding, "object was never declared");
      continue;
    }
    if (surrounding.count(*type)) b.objects[*type].insert(oi);
  }
  try {
    check_binding(net, b);
  } catch (const StructuralError& ex) {
    note(t, "", DeviationKind::invalid_binding, ex.what());
    deviation_count_ += dev.size();
    return dev;
  }

  // Objects seen for the first time are born in every input place of their
  // type; any other absent token is a repair.
  std::set<ObjectId> bound, born_here;
  for (const auto& [_, ids] : b.objects) bound.insert(ids.begin(), ids.end());
  for (const auto& oi : bound) {
    if (born_.count(oi)) continue;
    born_.insert(oi);
    born_here.insert(oi);
    const auto& rec = declared_.at(oi);
    state_.object_values[oi] = rec.attributes;
    record_birth({oi, rec.type, e.timestamp});
  }
  std::set<Token> inserted;
  for (const auto& p : net.inputs(t)) {
    for (const auto& oi : b.objects_of(net.type_of(p))) {
      if (state_.marking.contains({p, oi})) continue;
      inserted.insert({p, oi});
      state_.marking.add({p, oi});
      entry_times_[{p, oi}].push_back(e.timestamp);
      if (!born_here.count(oi)) note(t, oi, DeviationKind::missing_token, "inserted token in " + p);
    }
  }

  try {
    if (!guard::evaluate(dtim_->guard(t), guard_context(conf, state_, b)))
      note(t, "", DeviationKind::guard_violation, "guard evaluates to false");
  } catch (const guard::EvaluationError& ex) {
    note(t, "", DeviationKind::guard_violation, ex.what());
  }

  // Consume entry times and derive timing. Tokens created for this very
  // event never waited, so they do not count.
  std::optional<Instant> earliest, latest;
  for (const auto& p : net.inputs(t)) {
    for (const auto& oi : b.objects_of(net.type_of(p))) {
      auto& q = entry_times_[{p, oi}];
      Instant entered = q.empty() ? e.timestamp : q.front();
      if (!q.empty()) q.pop_front();
      if (q.empty()) entry_times_.erase({p, oi});
      if (inserted.count({p, oi})) continue;
      if (!earliest || entered < *earliest) earliest = entered;
      if (!latest || entered > *latest) latest = entered;
    }
  }
  state_.marking = fire(net, state_.marking, b);
  for (const auto& p : net.outputs(t))
    for (const auto& oi : b.objects_of(net.type_of(p))) entry_times_[{p, oi}].push_back(e.timestamp);
  const Millis sojourn = earliest ? e.timestamp - *earliest : Millis{0};
  record_execution({t, e.timestamp, sojourn, latest ? e.timestamp - *latest : Millis{0}});
  for (const auto& oi : bound) service_[oi] += sojourn;

  // Event payload writes, routed by the assigned operation.
  if (!e.values.empty()) {
    const auto writes = assigned_writes(*dtim_, conf, t);
    for (const auto& [attr, v] : e.values) {
      bool routed = false;
      for (const auto& [type, ids] : b.objects) {
        auto w = writes.find(type);
        if (w == writes.end() || !w->second.count(attr)) continue;
        routed = true;
        for (const auto& oi : ids) state_.object_values[oi][attr] = v;
      }
      if (!routed) {
        note(t, "", DeviationKind::write_violation, "attribute " + attr + " is outside the assigned operation");
        for (const auto& oi : bound) state_.object_values[oi][attr] = v;
      }
    }
  }

  // Objects whose tokens all reached sink places leave the marking.
  for (const auto& oi : bound) {
    auto toks = state_.marking.tokens_of(oi);
    bool done = std::all_of(toks.begin(), toks.end(), [&](const Token& tk) { return net.is_sink(tk.place); });
    if (!done) continue;
    for (const auto& tk : toks) {
      state_.marking.remove(tk, state_.marking.count(tk));
      entry_times_.erase(tk);
    }
    completed_.insert(oi);
    expiry_.emplace(e.timestamp + retention_, oi);
    record_completion({oi, declared_.at(oi).type, e.timestamp, service_[oi]});
    service_.erase(oi);
  }
  deviation_count_ += dev.size();
  return dev;
}

void Replayer::record_execution(const Execution& x) {
  log_.executions.push_back(x);
  for (auto& [k, stat] : trackers_) {
    if (k.target != x.transition) continue;
    if (k.kind == DiagnosticKind::avg_sojourn_time_of_transition) stat.add(x.fired_at, x.sojourn);
    else if (k.kind == DiagnosticKind::avg_waiting_time_of_transition) stat.add(x.fired_at, x.waiting);
    else if (k.kind == DiagnosticKind::count_of_executions_of_transition) stat.add(x.fired_at, Millis{0});
  }
}

void Replayer::record_completion(const Completion& c) {
  log_.completions.push_back(c);
  for (auto& [k, stat] : trackers_)
    if (k.kind == DiagnosticKind::avg_total_service_time_of_object_type && k.target == c.type)
      stat.add(c.completed_at, c.total_service);
}

void Replayer::record_birth(const Birth& b) {
  log_.births.push_back(b);
  for (auto& [k, stat] : trackers_)
    if (k.kind == DiagnosticKind::count_of_objects_of_type && k.target == b.type) stat.add(b.born_at, Millis{0});
}

WindowedStat& Replayer::tracker(const DiagnosticKey& key) {
  auto it = trackers_.find(key);
  if (it != trackers_.end()) return it->second;
  WindowedStat stat;
  switch (key.kind) {
    case DiagnosticKind::avg_sojourn_time_of_transition:
      for (const auto& x : log_.executions)
        if (x.transition == key.target) stat.add(x.fired_at, x.sojourn);
      break;
    case DiagnosticKind::avg_waiting_time_of_transition:
      for (const auto& x : log_.executions)
        if (x.transition == key.target) stat.add(x.fired_at, x.waiting);
      break;
    case DiagnosticKind::count_of_executions_of_transition:
      for (const auto& x : log_.executions)
        if (x.transition == key.target) stat.add(x.fired_at, Millis{0});
      break;
    case DiagnosticKind::avg_total_service_time_of_object_type:
      for (const auto& c : log_.completions)
        if (c.type == key.target) stat.add(c.completed_at, c.total_service);
      break;
    case DiagnosticKind::count_of_objects_of_type:
      for (const auto& b : log_.births)
        if (b.type == key.target) stat.add(b.born_at, Millis{0});
      break;
  }
  return trackers_.emplace(key, std::move(stat)).first->second;
}

void Replayer::update_diagnostics(Instant now, const std::set<DiagnosticKey>& keys) {
  if (clock_ && now < *clock_)
    throw OutOfOrderError("diagnostics requested at " + format_rfc3339(now) + ", before the replay clock");
  for (const auto& key : keys) {
    auto& stat = tracker(key);
    stat.evict_before(now - key.window);
    if (stat.count() == 0) {
      state_.diagnostics.erase(key);
      continue;
    }
    double value = 0;
    switch (key.kind) {
      case DiagnosticKind::count_of_executions_of_transition:
      case DiagnosticKind::count_of_objects_of_type:
        value = static_cast<double>(stat.count());
        break;
      default:
        value = to_seconds(stat.sum()) / static_cast<double>(stat.count());
    }
    state_.diagnostics[key] = value;
  }
}

void Replayer::collect_garbage(Instant now) {
  while (!expiry_.empty() && expiry_.begin()->first <= now) {
    auto oi = expiry_.begin()->second;
    expiry_.erase(expiry_.begin());
    if (!state_.marking.tokens_of(oi).empty()) continue;
    state_.object_values.erase(oi);
  }
  Millis horizon = std::max(retention_, log_horizon_);
  for (const auto& [k, _] : trackers_) horizon = std::max(horizon, k.window);
  const Instant cutoff = now - horizon;
  while (!log_.executions.empty() && log_.executions.front().fired_at < cutoff) log_.executions.pop_front();
  while (!log_.completions.empty() && log_.completions.front().completed_at < cutoff) log_.completions.pop_front();
  while (!log_.births.empty() && log_.births.front().born_at < cutoff) log_.births.pop_front();
}

std::vector<ocel::Event> ReorderBuffer::push(ocel::Event e) {
  if (released_ && e.timestamp < *released_)
    throw OutOfOrderError("event " + e.id + " arrived later than the allowed lateness");
  if (!newest_ || e.timestamp > *newest_) newest_ = e.timestamp;
  pending_.emplace(e.timestamp, std::move(e));
  std::vector<ocel::Event> out;
  const Instant watermark = *newest_ - lateness_;
  while (!pending_.empty() && pending_.begin()->first <= watermark) {
    released_ = pending_.begin()->first;
    out.push_back(std::move(pending_.begin()->second));
    pending_.erase(pending_.begin());
  }
  return out;
}

std::vector<ocel::Event> ReorderBuffer::flush() {
  std::vector<ocel::Event> out;
  for (auto& [t, e] : pending_) {
    released_ = t;
    out.push_back(std::move(e));
  }
  pending_.clear();
  return out;
}

}  // namespace octwin::replay
