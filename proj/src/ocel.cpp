#include "octwin/ocel.hpp"

#include <algorithm>
#include <set>

namespace octwin::ocel {

namespace {

Event event_from_json(const std::string& id, const json& e, const std::string& path) {
  if (!e.is_object()) throw ParseError(path, "event must be an object");
  Event ev;
  ev.id = id;
  if (!e.contains("ocel:activity") || !e.at("ocel:activity").is_string())
    throw ParseError(path + "/ocel:activity", "missing or not a string");
  ev.activity = e.at("ocel:activity").get<std::string>();
  if (!e.contains("ocel:timestamp") || !e.at("ocel:timestamp").is_string())
    throw ParseError(path + "/ocel:timestamp", "missing or not a string");
  try {
    ev.timestamp = parse_rfc3339(e.at("ocel:timestamp").get<std::string>());
  } catch (const std::invalid_argument& ex) {
    throw ParseError(path + "/ocel:timestamp", ex.what());
  }
  if (!e.contains("ocel:omap") || !e.at("ocel:omap").is_array())
    throw ParseError(path + "/ocel:omap", "missing or not an array");
  for (const auto& o : e.at("ocel:omap")) {
    if (!o.is_string()) throw ParseError(path + "/ocel:omap", "object references must be strings");
    ev.objects.push_back(o.get<std::string>());
  }
  if (ev.objects.empty()) throw ParseError(path + "/ocel:omap", "event references no object");
  try {
    ev.values = attributes_from_json(e.value("ocel:vmap", json::object()));
  } catch (const std::invalid_argument& ex) {
    throw ParseError(path + "/ocel:vmap", ex.what());
  }
  return ev;
}

ObjectRecord object_from_json(const std::string& id, const json& o, const std::string& path) {
  if (!o.is_object()) throw ParseError(path, "object must be an object");
  if (!o.contains("ocel:type") || !o.at("ocel:type").is_string())
    throw ParseError(path + "/ocel:type", "missing or not a string");
  ObjectRecord rec{id, o.at("ocel:type").get<std::string>(), {}};
  try {
    rec.attributes = attributes_from_json(o.value("ocel:ovmap", json::object()));
  } catch (const std::invalid_argument& ex) {
    throw ParseError(path + "/ocel:ovmap", ex.what());
  }
  return rec;
}

}  // namespace

Log ingest(const json& doc, const Dtim* dtim) {
  if (!doc.is_object()) throw ParseError("", "OCEL document must be an object");
  Log log;
  if (doc.contains("ocel:objects")) {
    const auto& objs = doc.at("ocel:objects");
    if (!objs.is_object()) throw ParseError("ocel:objects", "expected an object keyed by object id");
    for (const auto& [id, o] : objs.items()) log.objects.emplace(id, object_from_json(id, o, "ocel:objects/" + id));
  }
  if (!doc.contains("ocel:events")) throw ParseError("ocel:events", "missing");
  const auto& evs = doc.at("ocel:events");
  if (!evs.is_object()) throw ParseError("ocel:events", "expected an object keyed by event id");
  for (const auto& [id, e] : evs.items()) log.events.push_back(event_from_json(id, e, "ocel:events/" + id));

  std::set<std::string> dangling;
  for (const auto& e : log.events)
    for (const auto& o : e.objects)
      if (!log.objects.count(o)) dangling.insert(o);
  if (!dangling.empty()) {
    std::string msg = "events reference undeclared objects:";
    for (const auto& d : dangling) msg += " " + d;
    throw IngestionError(msg, {dangling.begin(), dangling.end()});
  }
  std::stable_sort(log.events.begin(), log.events.end(),
                   [](const Event& a, const Event& b) { return a.timestamp < b.timestamp; });
  if (dtim) {
    const auto known = dtim->net().object_types();
    std::set<std::string> unknown;
    for (const auto& [_, o] : log.objects)
      if (!known.count(o.type)) unknown.insert(o.type);
    log.unknown_types.assign(unknown.begin(), unknown.end());
  }
  return log;
}

Log ingest_text(const std::string& text, const Dtim* dtim) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("", e.what());
  }
  return ingest(doc, dtim);
}

json to_json(const Event& e) {
  return {{"ocel:activity", e.activity},
          {"ocel:timestamp", format_rfc3339(e.timestamp)},
          {"ocel:omap", e.objects},
          {"ocel:vmap", octwin::to_json(e.values)}};
}

json to_json(const ObjectRecord& o) { return {{"ocel:type", o.type}, {"ocel:ovmap", octwin::to_json(o.attributes)}}; }

json to_json(const Log& log) {
  json doc;
  std::set<std::string> types;
  std::set<std::string> attrs;
  for (const auto& [_, o] : log.objects) {
    types.insert(o.type);
    for (const auto& [a, __] : o.attributes) attrs.insert(a);
  }
  for (const auto& e : log.events)
    for (const auto& [a, _] : e.values) attrs.insert(a);
  doc["ocel:global-log"] = {{"ocel:attribute-names", attrs}, {"ocel:object-types", types}, {"ocel:version", "1.0"}};
  doc["ocel:global-event"] = {{"ocel:activity", "__INVALID__"}};
  doc["ocel:global-object"] = {{"ocel:type", "__INVALID__"}};
  doc["ocel:events"] = json::object();
  for (const auto& e : log.events) doc["ocel:events"][e.id] = to_json(e);
  doc["ocel:objects"] = json::object();
  for (const auto& [id, o] : log.objects) doc["ocel:objects"][id] = to_json(o);
  return doc;
}

StreamItem parse_stream_line(const json& line) {
  if (!line.is_object()) throw ParseError("", "stream line must be an object");
  StreamItem item;
  if (line.contains("ocel:type")) {
    if (!line.contains("ocel:oid") || !line.at("ocel:oid").is_string()) throw ParseError("ocel:oid", "missing");
    auto id = line.at("ocel:oid").get<std::string>();
    item.object = object_from_json(id, line, id);
    return item;
  }
  if (!line.contains("ocel:eid") || !line.at("ocel:eid").is_string()) throw ParseError("ocel:eid", "missing");
  auto id = line.at("ocel:eid").get<std::string>();
  item.event = event_from_json(id, line, id);
  return item;
}

}  // namespace octwin::ocel
