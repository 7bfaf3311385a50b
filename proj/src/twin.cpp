#include "octwin/twin.hpp"

#include <algorithm>

namespace octwin {

void IngestSummary::merge(const IngestSummary& o) {
  received += o.received;
  applied += o.applied;
  duplicates += o.duplicates;
  buffered = o.buffered;
  rejected.insert(rejected.end(), o.rejected.begin(), o.rejected.end());
  deviations.insert(deviations.end(), o.deviations.begin(), o.deviations.end());
  if (o.last_event) last_event = o.last_event;
}

json to_json(const IngestSummary& s) {
  json devs = json::array();
  for (const auto& d : s.deviations) devs.push_back(replay::to_json(d));
  return {{"events", s.applied},
          {"received", s.received},
          {"duplicates", s.duplicates},
          {"buffered", s.buffered},
          {"rejected", s.rejected},
          {"deviations", devs},
          {"last_event", s.last_event ? json(*s.last_event) : json(nullptr)}};
}

SessionOptions session_options_from_json(const json& j) {
  SessionOptions o;
  if (!j.is_object()) return o;
  if (j.contains("retention")) o.retention = duration_from_json(j.at("retention"));
  if (j.contains("lateness")) o.lateness = duration_from_json(j.at("lateness"));
  if (j.contains("step_origin")) o.steps.origin = parse_rfc3339(j.at("step_origin").get<std::string>());
  if (j.contains("step_scale")) o.steps.scale = duration_from_json(j.at("step_scale"));
  if (j.contains("report")) {
    o.report_document = j.at("report");
    o.report = impact::report_options_from_json(o.report_document);
  }
  return o;
}

TwinSession::TwinSession(std::string id, std::shared_ptr<const Dtim> dtim, Configuration initial,
                         SessionOptions options)
    : id_(std::move(id)),
      dtim_(std::move(dtim)),
      initial_(initial),
      options_(std::move(options)),
      scheduler_(dtim_, std::move(initial)),
      replayer_(dtim_, options_.retention),
      buffer_(options_.lateness) {}

std::optional<Instant> TwinSession::clock() const {
  std::optional<Instant> t = replayer_.clock();
  if (moved_to_ && (!t || *moved_to_ > *t)) t = moved_to_;
  return t;
}

void TwinSession::define_action(Action action) {
  scheduler_.define(std::move(action));
}

ScheduleResult TwinSession::schedule(ActionInstance instance) {
  if (instance.id.empty()) instance.id = "AI" + std::to_string(scheduled_.size() + 1);
  auto r = scheduler_.schedule(instance);
  if (!r.accepted) return r;
  r.instance = instance.id;
  scheduled_.push_back(instance);
  replayer_.keep_log(options_.report.window.value_or(instance.end - instance.start));
  notify("timeline", timeline_json());
  return r;
}

void TwinSession::register_object(const ocel::ObjectRecord& object) {
  objects_.emplace(object.id, object);
  replayer_.register_object(object);
}

void TwinSession::advance_scheduler(Instant t) {
  if (t <= scheduler_.clock()) return;
  bool changed = false;
  Scheduler::Hooks hooks;
  hooks.on_start = [&](const ActionInstance& ai, const Configuration& before, const Configuration& after,
                       const EffectiveChange& change) {
    const auto types = impact::impacted_object_types(*dtim_, change, before, after);
    const auto transitions = impact::impacted_transitions(*dtim_, change);
    const auto keys = impact::performance_keys(*dtim_, types, transitions,
                                               options_.report.window.value_or(ai.end - ai.start),
                                               options_.report.extra_keys);
    replayer_.update_diagnostics(ai.start, keys);
    reports_[ai.id] = impact::build_report(*dtim_, ai, before, after, change, replayer_.state(), options_.report);
    notify("impact", impact::to_json(reports_[ai.id], &options_.steps));
    changed = true;
  };
  hooks.on_end = [&](const ActionInstance& ai, const Configuration&) {
    auto& r = reports_.at(ai.id);
    replayer_.update_diagnostics(ai.end, r.performance_keys);
    impact::complete_report(r, replayer_.state());
    notify("impact", impact::to_json(r, &options_.steps));
    changed = true;
  };
  scheduler_.advance_to(t, hooks);
  if (changed) notify("timeline", timeline_json());
}

void TwinSession::advance_to(Instant t) {
  if (auto c = clock(); c && t < *c) throw replay::OutOfOrderError("the twin is already at " + format_rfc3339(*c));
  advance_scheduler(t);
  moved_to_ = t;
  notify("state", state_json());
}

void TwinSession::apply(const ocel::Event& e, IngestSummary& out) {
  if (auto c = clock(); c && e.timestamp < *c) {
    out.rejected.push_back(e.id + ": timestamp " + format_rfc3339(e.timestamp) + " is behind the twin clock");
    accepted_.erase(e.id);
    return;
  }
  advance_scheduler(e.timestamp);
  auto devs = replayer_.replay_event(scheduler_.configuration(), e);
  out.deviations.insert(out.deviations.end(), devs.begin(), devs.end());
  ++out.applied;
  out.last_event = e.id;
  last_event_ = e.id;
  applied_.push_back(e);
}

IngestSummary TwinSession::ingest_events(const std::vector<ocel::Event>& events) {
  IngestSummary out;
  for (const auto& e : events) {
    ++out.received;
    if (!accepted_.insert(e.id).second) {
      ++out.duplicates;
      continue;
    }
    std::vector<ocel::Event> ready;
    try {
      ready = buffer_.push(e);
    } catch (const replay::OutOfOrderError& ex) {
      accepted_.erase(e.id);
      out.rejected.push_back(e.id + ": " + ex.what());
      continue;
    }
    for (const auto& r : ready) apply(r, out);
  }
  out.buffered = buffer_.pending();
  out.last_event = last_event_;  // acknowledges duplicates too
  if (out.received) notify("state", state_json());
  return out;
}

IngestSummary TwinSession::ingest(const ocel::Log& log) {
  for (const auto& [_, o] : log.objects) register_object(o);
  return ingest_events(log.events);
}

IngestSummary TwinSession::ingest_stream(const std::vector<ocel::StreamItem>& items) {
  IngestSummary out;
  std::vector<ocel::Event> run;
  auto drain = [&] {
    if (run.empty()) return;
    out.merge(ingest_events(run));
    run.clear();
  };
  for (const auto& item : items) {
    if (item.object) {
      drain();
      register_object(*item.object);
    }
    if (item.event) run.push_back(*item.event);
  }
  drain();
  out.buffered = buffer_.pending();
  out.last_event = last_event_;
  return out;
}

IngestSummary TwinSession::flush() {
  IngestSummary out;
  for (const auto& e : buffer_.flush()) apply(e, out);
  out.last_event = last_event_;
  if (out.applied) notify("state", state_json());
  return out;
}

impact::ImpactReport TwinSession::report(const std::string& instance) const {
  auto it = reports_.find(instance);
  if (it != reports_.end()) return it->second;
  const ActionInstance* ai = scheduler_.instance(instance);
  if (!ai) throw std::out_of_range("unknown action instance " + instance);
  return impact::pending_report(*ai);
}

std::vector<impact::ImpactReport> TwinSession::reports() const {
  std::vector<impact::ImpactReport> out;
  for (const auto& ai : scheduler_.instances()) out.push_back(report(ai.id));
  return out;
}

int TwinSession::subscribe(Listener listener) {
  listeners_[++next_listener_] = std::move(listener);
  return next_listener_;
}

void TwinSession::unsubscribe(int token) { listeners_.erase(token); }

void TwinSession::notify(const std::string& kind, const json& payload) {
  for (const auto& [_, l] : listeners_) l(kind, payload);
}

namespace {

json instant_or_null(const std::optional<Instant>& t) { return t ? json(format_rfc3339(*t)) : json(nullptr); }

}  // namespace

json TwinSession::describe() const {
  return {{"id", id_},
          {"dtim", to_json(*dtim_)},
          {"configuration", to_json(configuration())},
          {"clock", instant_or_null(clock())},
          {"step", clock() ? json(options_.steps.step_of(*clock())) : json(nullptr)}};
}

json TwinSession::state_json() const {
  json places = json::object();
  for (const auto& [p, n] : state().marking.per_place()) places[p] = n;
  json diags = json::array();
  for (const auto& [k, v] : state().diagnostics) {
    auto j = to_json(k);
    j["value"] = v;
    diags.push_back(std::move(j));
  }
  return {{"clock", instant_or_null(clock())},
          {"configuration", to_json(configuration())},
          {"marking", places},
          {"tokens", state().marking.size()},
          {"objects", state().marking.objects().size()},
          {"diagnostics", diags},
          {"deviations", deviation_total()},
          {"last_event", last_event_ ? json(*last_event_) : json(nullptr)}};
}

json TwinSession::timeline_json() const {
  json instances = json::array();
  for (const auto& ai : scheduler_.instances()) {
    auto j = to_json(ai, &options_.steps);
    j["status"] = to_string(scheduler_.status(ai.id));
    instances.push_back(std::move(j));
  }
  auto now = clock();
  return {{"now", instant_or_null(now)},
          {"now_step", now ? json(options_.steps.step_of(*now)) : json(nullptr)},
          {"step_origin", format_rfc3339(options_.steps.origin)},
          {"step_scale", to_seconds(options_.steps.scale)},
          {"instances", instances},
          {"configurations", history_to_json(scheduler_.history(), &options_.steps)}};
}

json TwinSession::report_json(const std::string& instance) const {
  return impact::to_json(report(instance), &options_.steps);
}

json TwinSession::snapshot() const {
  json actions = json::array();
  for (const auto& [_, a] : scheduler_.actions()) actions.push_back(to_json(a));
  json instances = json::array();
  for (const auto& ai : scheduled_) instances.push_back(to_json(ai));
  ocel::Log log;
  log.objects = objects_;
  log.events = applied_;
  return {{"id", id_},
          {"dtim", to_json(*dtim_)},
          {"configuration", to_json(initial_)},
          {"options",
           {{"retention", to_seconds(options_.retention)},
            {"lateness", to_seconds(options_.lateness)},
            {"step_origin", format_rfc3339(options_.steps.origin)},
            {"step_scale", to_seconds(options_.steps.scale)},
            {"report", options_.report_document}}},
          {"actions", actions},
          {"instances", instances},
          {"log", ocel::to_json(log)},
          {"moved_to", moved_to_ ? json(format_rfc3339(*moved_to_)) : json(nullptr)}};
}

std::unique_ptr<TwinSession> TwinSession::restore(const json& snap) {
  auto dtim = std::make_shared<const Dtim>(dtim_from_json(snap.at("dtim")));
  auto opts = session_options_from_json(snap.value("options", json::object()));
  auto s = std::make_unique<TwinSession>(snap.at("id").get<std::string>(), dtim,
                                         configuration_from_json(snap.at("configuration")), opts);
  for (const auto& a : snap.value("actions", json::array())) s->define_action(action_from_json(a));
  for (const auto& ai : snap.value("instances", json::array()))
    s->schedule(action_instance_from_json(ai, opts.steps));
  if (snap.contains("log")) s->ingest(ocel::ingest(snap.at("log"), dtim.get()));
  if (snap.contains("moved_to") && snap.at("moved_to").is_string())
    s->advance_to(parse_rfc3339(snap.at("moved_to").get<std::string>()));
  return s;
}

}  // namespace octwin
