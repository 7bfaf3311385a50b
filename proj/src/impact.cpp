#include "octwin/impact.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace octwin::impact {

std::set<ObjectType> impacted_object_types(const Dtim& dtim, const EffectiveChange& change,
                                           const Configuration& before, const Configuration& after) {
  std::set<ObjectType> out;
  for (const auto& t : change.transitions) {
    const auto old_w = assigned_writes(dtim, before, t);
    const auto new_w = assigned_writes(dtim, after, t);
    std::set<ObjectType> types;
    for (const auto& [ot, _] : old_w) types.insert(ot);
    for (const auto& [ot, _] : new_w) types.insert(ot);
    for (const auto& ot : types) {
      auto a = old_w.count(ot) ? old_w.at(ot) : std::set<std::string>{};
      auto b = new_w.count(ot) ? new_w.at(ot) : std::set<std::string>{};
      if (a != b) out.insert(ot);  // symmetric difference is non-empty
    }
  }
  return out;
}

std::set<TransitionId> impacted_transitions(const Dtim& dtim, const EffectiveChange& change) {
  std::set<TransitionId> out = change.transitions;
  if (change.valves.empty()) return out;
  for (const auto& t : dtim.net().transitions()) {
    for (const auto& v : guard::referenced_valves(dtim.guard(t.id)))
      if (change.valves.count(v)) {
        out.insert(t.id);
        break;
      }
  }
  return out;
}

std::set<ObjectId> objects_of_impacted_object_types(const Dtim& dtim, const Marking& at_start,
                                                    const std::set<ObjectType>& types) {
  std::set<ObjectId> out;
  if (types.empty()) return out;
  for (const auto& [tok, _] : at_start.counts())
    if (types.count(dtim.net().type_of(tok.place))) out.insert(tok.object);
  return out;
}

std::set<ObjectId> objects_of_impacted_transitions(const Dtim& dtim, const Marking& at_start,
                                                   const std::set<TransitionId>& transitions) {
  std::set<PlaceId> places;
  for (const auto& t : transitions) {
    auto r = rel(dtim.net(), t);
    places.insert(r.begin(), r.end());
  }
  std::set<ObjectId> out;
  for (const auto& [tok, _] : at_start.counts())
    if (places.count(tok.place)) out.insert(tok.object);
  return out;
}

double score(const std::set<std::string>& entities, const std::set<std::string>& universe, const ScoreSpec& spec) {
  auto weighted = [&](const std::set<std::string>& s) {
    double total = 0;
    for (const auto& e : s) {
      if (spec.filter && !spec.filter(e)) continue;
      double w = spec.weight ? spec.weight(e) : 1.0;
      if (w < 0 || std::isnan(w)) throw std::invalid_argument("negative weight for " + e);
      total += w;
    }
    return total;
  };
  double abs = weighted(entities);
  if (spec.mode == ScoreMode::absolute) return abs;
  for (const auto& e : entities)
    if (!universe.count(e)) throw std::invalid_argument("entity " + e + " lies outside the universe");
  double denom = weighted(universe);
  return denom == 0 ? 0.0 : abs / denom;
}

std::optional<double> performance_delta(const OperationalState& at_end, const OperationalState& at_start,
                                        const DiagnosticKey& key) {
  auto e = diagnostics_lookup(at_end, key);
  auto s = diagnostics_lookup(at_start, key);
  if (!e || !s) return std::nullopt;
  return *e - *s;
}

std::string to_string(Metric m) {
  switch (m) {
    case Metric::impacted_object_types: return "impacted_object_types";
    case Metric::impacted_transitions: return "impacted_transitions";
    case Metric::objects_of_impacted_object_types: return "objects_of_impacted_object_types";
    case Metric::objects_of_impacted_transitions: return "objects_of_impacted_transitions";
  }
  return "?";
}

Metric metric_from_string(const std::string& s) {
  for (auto m : {Metric::impacted_object_types, Metric::impacted_transitions, Metric::objects_of_impacted_object_types,
                 Metric::objects_of_impacted_transitions})
    if (to_string(m) == s) return m;
  throw FormatError("unknown impact metric " + s);
}

NamedScore named_score_from_json(const json& j) {
  NamedScore s;
  s.name = j.at("name").get<std::string>();
  s.metric = metric_from_string(j.at("metric").get<std::string>());
  auto mode = j.value("mode", std::string("absolute"));
  if (mode == "relative") s.mode = ScoreMode::relative;
  else if (mode != "absolute") throw FormatError("score mode must be absolute or relative");
  if (j.contains("include")) s.include = j.at("include").get<std::set<std::string>>();
  if (j.contains("filter")) {
    try {
      s.object_filter = guard::parse(j.at("filter").get<std::string>());
    } catch (const guard::SyntaxError& e) {
      throw FormatError("score " + s.name + ": " + e.what());
    }
  }
  const json members_weights = j.value("weights", json::object());
  for (const auto& [k, v] : members_weights.items()) {
    double w = v.get<double>();
    if (w < 0) throw FormatError("score " + s.name + " has a negative weight for " + k);
    s.weights[k] = w;
  }
  s.queue_weight = j.value("queue_weight", 1.0);
  if (s.queue_weight < 0) throw FormatError("score " + s.name + " has a negative queue weight");
  return s;
}

ReportOptions report_options_from_json(const json& j) {
  ReportOptions o;
  if (j.is_null()) return o;
  for (const auto& s : j.value("scores", json::array())) o.scores.push_back(named_score_from_json(s));
  for (const auto& k : j.value("diagnostics", json::array())) o.extra_keys.push_back(diagnostic_key_from_json(k));
  if (j.contains("window")) o.window = duration_from_json(j.at("window"));
  return o;
}

std::set<DiagnosticKey> performance_keys(const Dtim& dtim, const std::set<ObjectType>& types,
                                         const std::set<TransitionId>& transitions, Millis window,
                                         const std::vector<DiagnosticKey>& extra) {
  std::set<DiagnosticKey> keys;
  for (const auto& ot : types) keys.insert({DiagnosticKind::avg_total_service_time_of_object_type, ot, window});
  const auto& net = dtim.net();
  for (const auto& t : transitions) {
    keys.insert({DiagnosticKind::avg_sojourn_time_of_transition, t, window});
    keys.insert({DiagnosticKind::avg_waiting_time_of_transition, t, window});
    keys.insert({DiagnosticKind::count_of_executions_of_transition, t, window});
    // Object types whose lifecycle starts at t.
    for (const auto& p : net.inputs(t))
      if (net.producers(p).empty())
        keys.insert({DiagnosticKind::avg_total_service_time_of_object_type, net.type_of(p), window});
  }
  keys.insert(extra.begin(), extra.end());
  return keys;
}

ImpactReport pending_report(const ActionInstance& instance) {
  ImpactReport r;
  r.instance = instance.id;
  r.action = instance.action;
  r.start = instance.start;
  r.end = instance.end;
  r.status = InstanceStatus::scheduled;
  return r;
}

namespace {

std::set<std::string> all_types(const Dtim& dtim) { return dtim.net().object_types(); }

std::set<std::string> all_transitions(const Dtim& dtim) {
  std::set<std::string> out;
  for (const auto& t : dtim.net().transitions()) out.insert(t.id);
  return out;
}

double named(const NamedScore& s, const Dtim& dtim, const ImpactReport& r, const OperationalState& st) {
  ScoreSpec spec;
  spec.mode = s.mode;
  const bool objects =
      s.metric == Metric::objects_of_impacted_object_types || s.metric == Metric::objects_of_impacted_transitions;
  if (!objects) {
    if (s.include) spec.filter = [&](const std::string& e) { return s.include->count(e) > 0; };
    spec.weight = [&](const std::string& e) {
      auto it = s.weights.find(e);
      return it == s.weights.end() ? 1.0 : it->second;
    };
    if (s.metric == Metric::impacted_object_types) return score(r.impacted_object_types, all_types(dtim), spec);
    return score(r.impacted_transitions, all_transitions(dtim), spec);
  }
  const auto& net = dtim.net();
  std::map<ObjectId, ObjectType> type_of;
  std::set<ObjectId> queued;
  std::set<PlaceId> queue_places;
  for (const auto& t : r.impacted_transitions)
    for (const auto& p : net.inputs(t)) queue_places.insert(p);
  for (const auto& [tok, _] : st.marking.counts()) {
    type_of[tok.object] = net.type_of(tok.place);
    if (queue_places.count(tok.place)) queued.insert(tok.object);
  }
  spec.filter = [&](const std::string& oi) {
    const auto& type = type_of.at(oi);
    if (s.include && !s.include->count(type)) return false;
    if (!s.object_filter) return true;
    guard::EvaluationContext ctx;
    auto it = st.object_values.find(oi);
    ctx.bound_objects[type].push_back({oi, it == st.object_values.end() ? AttributeMap{} : it->second});
    try {
      return guard::evaluate(*s.object_filter, ctx);
    } catch (const guard::EvaluationError&) {
      return false;
    }
  };
  spec.weight = [&](const std::string& oi) {
    auto it = s.weights.find(type_of.at(oi));
    double w = it == s.weights.end() ? 1.0 : it->second;
    return queued.count(oi) ? w * s.queue_weight : w;
  };
  std::set<std::string> universe;
  for (const auto& [oi, _] : type_of) universe.insert(oi);
  const auto& ents = s.metric == Metric::objects_of_impacted_object_types ? r.objects_of_impacted_types
                                                                           : r.objects_of_impacted_transitions;
  return score(ents, universe, spec);
}

}  // namespace

ImpactReport build_report(const Dtim& dtim, const ActionInstance& instance, const Configuration& before,
                          const Configuration& after, const EffectiveChange& change, const OperationalState& at_start,
                          const ReportOptions& options) {
  ImpactReport r = pending_report(instance);
  r.status = InstanceStatus::active;
  r.change = change;
  r.impacted_object_types = impacted_object_types(dtim, change, before, after);
  r.impacted_transitions = impacted_transitions(dtim, change);
  r.objects_of_impacted_types = objects_of_impacted_object_types(dtim, at_start.marking, r.impacted_object_types);
  r.objects_of_impacted_transitions = objects_of_impacted_transitions(dtim, at_start.marking, r.impacted_transitions);

  const auto types = all_types(dtim);
  const auto transitions = all_transitions(dtim);
  const auto objects = at_start.marking.objects();
  r.structural_scores["impacted_business_objects"] = static_cast<double>(r.impacted_object_types.size());
  r.structural_scores["impacted_business_functions"] = static_cast<double>(r.impacted_transitions.size());
  r.structural_scores["impacted_business_objects_relative"] =
      score(r.impacted_object_types, types, {ScoreMode::relative, {}, {}});
  r.structural_scores["impacted_business_functions_relative"] =
      score(r.impacted_transitions, transitions, {ScoreMode::relative, {}, {}});
  r.operational_scores["object_instances_of_impacted_business_objects"] =
      static_cast<double>(r.objects_of_impacted_types.size());
  r.operational_scores["object_instances_of_impacted_business_functions"] =
      static_cast<double>(r.objects_of_impacted_transitions.size());
  r.operational_scores["object_instances_of_impacted_business_objects_relative"] =
      score(r.objects_of_impacted_types, objects, {ScoreMode::relative, {}, {}});
  r.operational_scores["object_instances_of_impacted_business_functions_relative"] =
      score(r.objects_of_impacted_transitions, objects, {ScoreMode::relative, {}, {}});
  for (const auto& s : options.scores) {
    bool structural = s.metric == Metric::impacted_object_types || s.metric == Metric::impacted_transitions;
    (structural ? r.structural_scores : r.operational_scores)[s.name] = named(s, dtim, r, at_start);
  }

  const Millis window = options.window.value_or(instance.end - instance.start);
  r.performance_keys = performance_keys(dtim, r.impacted_object_types, r.impacted_transitions, window, options.extra_keys);
  for (const auto& k : r.performance_keys) r.diagnostics_at_start[k] = diagnostics_lookup(at_start, k);
  return r;
}

void complete_report(ImpactReport& r, const OperationalState& at_end) {
  r.status = InstanceStatus::completed;
  for (const auto& k : r.performance_keys) {
    auto end = diagnostics_lookup(at_end, k);
    r.diagnostics_at_end[k] = end;
    auto it = r.diagnostics_at_start.find(k);
    if (end && it != r.diagnostics_at_start.end() && it->second) r.performance_deltas[k] = *end - *it->second;
    else r.performance_deltas[k] = std::nullopt;
  }
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(); }

}  // namespace

json to_json(const ImpactReport& r, const StepClock* steps) {
  json j;
  j["instance"] = r.instance;
  j["action"] = r.action;
  j["start"] = format_rfc3339(r.start);
  j["end"] = format_rfc3339(r.end);
  if (steps) {
    j["start_step"] = steps->step_of(r.start);
    j["end_step"] = steps->step_of(r.end);
  }
  j["status"] = to_string(r.status);
  j["effective_change"] = to_json(r.change);
  j["impacted_object_types"] = r.impacted_object_types;
  j["impacted_transitions"] = r.impacted_transitions;
  j["objects_of_impacted_object_types"] = r.objects_of_impacted_types;
  j["objects_of_impacted_transitions"] = r.objects_of_impacted_transitions;
  j["structural_scores"] = r.structural_scores;
  j["operational_scores"] = r.operational_scores;
  json perf = json::array();
  for (const auto& k : r.performance_keys) {
    json row = to_json(k);
    row["start"] = r.diagnostics_at_start.count(k) ? opt(r.diagnostics_at_start.at(k)) : json();
    if (r.performance_available()) {
      row["end"] = opt(r.diagnostics_at_end.at(k));
      row["delta"] = opt(r.performance_deltas.at(k));
      row["measurable"] = r.performance_deltas.at(k).has_value();
    }
    perf.push_back(row);
  }
  j["performance"] = perf;
  j["performance_available"] = r.performance_available();
  return j;
}

// MARK: - grid

std::vector<GridRow> default_grid(const std::vector<ImpactReport>& reports) {
  std::vector<GridRow> rows = {
      {"Structural object impact", "Total number of impacted business objects", "impacted_business_objects", {}},
      {"Structural function impact", "Total number of impacted business functions", "impacted_business_functions", {}},
      {"Operational object impact", "Total number of object instances of the impacted business objects",
       "object_instances_of_impacted_business_objects", {}},
      {"Operational function impact", "Total number of object instances of impacted business functions",
       "object_instances_of_impacted_business_functions", {}},
  };
  std::set<std::pair<DiagnosticKind, std::string>> seen;
  for (const auto& r : reports)
    for (const auto& k : r.performance_keys) {
      if (!seen.emplace(k.kind, k.target).second) continue;
      bool object = targets_object_type(k.kind);
      rows.push_back({object ? "Object performance impact" : "Function performance impact",
                      "Difference in " + to_string(k.kind) + " of " + k.target, std::nullopt,
                      std::make_pair(k.kind, k.target)});
    }
  return rows;
}

std::vector<GridRow> grid_from_json(const json& j) {
  std::vector<GridRow> rows;
  for (const auto& r : j) {
    GridRow row{r.value("impact", std::string{}), r.at("label").get<std::string>(), std::nullopt, std::nullopt};
    if (r.contains("score")) row.score = r.at("score").get<std::string>();
    else if (r.contains("diagnostic")) {
      const auto& d = r.at("diagnostic");
      row.diagnostic = std::make_pair(diagnostic_kind_from_string(d.at("kind").get<std::string>()),
                                      d.at("target").get<std::string>());
    } else {
      throw FormatError("grid row " + row.label + " needs a score or a diagnostic");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_duration(double seconds) {
  std::ostringstream os;
  double a = std::fabs(seconds);
  const char* sign = seconds < 0 ? "-" : "";
  if (a < 60) os << sign << std::llround(a) << "s";
  else if (a < 3600) os << sign << std::llround(a / 60) << "m";
  else os << sign << std::fixed << std::setprecision(1) << a / 3600 << "h";
  return os.str();
}

namespace {

std::string format_count(double v) {
  std::ostringstream os;
  if (v == std::floor(v)) os << static_cast<long long>(v);
  else os << std::fixed << std::setprecision(3) << v;
  return os.str();
}

const std::optional<double>* find_delta(const ImpactReport& r, const GridRow& row) {
  for (const auto& [k, v] : r.performance_deltas)
    if (k.kind == row.diagnostic->first && k.target == row.diagnostic->second) return &v;
  return nullptr;
}

bool has_key(const ImpactReport& r, const GridRow& row) {
  return std::any_of(r.performance_keys.begin(), r.performance_keys.end(), [&](const DiagnosticKey& k) {
    return k.kind == row.diagnostic->first && k.target == row.diagnostic->second;
  });
}

}  // namespace

std::string cell(const ImpactReport& r, const GridRow& row) {
  if (row.score) {
    if (r.status == InstanceStatus::scheduled) return "pending";
    auto s = r.structural_scores.find(*row.score);
    if (s != r.structural_scores.end()) return format_count(s->second);
    auto o = r.operational_scores.find(*row.score);
    if (o != r.operational_scores.end()) return format_count(o->second);
    return "-";
  }
  if (r.status == InstanceStatus::scheduled) return "pending";
  if (!has_key(r, row)) return "-";
  if (!r.performance_available()) return "pending";
  const auto* d = find_delta(r, row);
  if (!d || !*d) return "n/a";
  if (row.diagnostic->first == DiagnosticKind::count_of_executions_of_transition ||
      row.diagnostic->first == DiagnosticKind::count_of_objects_of_type)
    return format_count(**d);
  return format_duration(**d);
}

std::string render_grid(const std::vector<ImpactReport>& reports, const std::vector<GridRow>& rows) {
  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header = {"Impact", "Metric"};
  for (const auto& r : reports) header.push_back(r.instance);
  table.push_back(header);
  for (const auto& row : rows) {
    std::vector<std::string> line = {row.impact, row.label};
    for (const auto& r : reports) line.push_back(cell(r, row));
    table.push_back(line);
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : table)
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  std::ostringstream os;
  for (const auto& line : table) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i) os << "  ";
      if (i < 2) os << std::left << std::setw(static_cast<int>(width[i])) << line[i];
      else os << std::right << std::setw(static_cast<int>(width[i])) << line[i];
    }
    os << '\n';
  }
  return os.str();
}

json grid_to_json(const std::vector<ImpactReport>& reports, const std::vector<GridRow>& rows) {
  json out = json::array();
  for (const auto& row : rows) {
    json j = {{"impact", row.impact}, {"metric", row.label}};
    json cells = json::object();
    for (const auto& r : reports) cells[r.instance] = cell(r, row);
    j["values"] = cells;
    out.push_back(j);
  }
  return out;
}

}  // namespace octwin::impact
