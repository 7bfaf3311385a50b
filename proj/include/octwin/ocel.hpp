#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "octwin/dtim.hpp"

namespace octwin::ocel {

// Malformed document; `path` locates the offending member, e.g. "ocel:events/e7/ocel:timestamp".
struct ParseError : std::runtime_error {
  ParseError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path(path) {}
  std::string path;
};

struct IngestionError : std::runtime_error {
  IngestionError(const std::string& what, std::vector<std::string> ids)
      : std::runtime_error(what), ids(std::move(ids)) {}
  std::vector<std::string> ids;
};

struct Event {
  std::string id;
  std::string activity;
  Instant timestamp;
  std::vector<ObjectId> objects;
  AttributeMap values;
};

struct ObjectRecord {
  ObjectId id;
  ObjectType type;
  AttributeMap attributes;
};

struct Log {
  std::vector<Event> events;  // sorted by timestamp, ties in document order
  std::map<ObjectId, ObjectRecord> objects;
  std::vector<std::string> unknown_types;  // object types the DT-IM does not know
};

/// Reads an OCEL JSON document ("ocel:events" / "ocel:objects"). Throws
/// ParseError for malformed members and IngestionError for events that
/// reference undeclared objects. With `dtim`, object types absent from its
/// net are reported in Log::unknown_types.
Log ingest(const json& document, const Dtim* dtim = nullptr);
Log ingest_text(const std::string& text, const Dtim* dtim = nullptr);

json to_json(const Log& log);

/// A single NDJSON line: an object ({"ocel:oid", "ocel:type", ...}) or an
/// event ({"ocel:eid", "ocel:activity", ...}).
struct StreamItem {
  std::optional<Event> event;
  std::optional<ObjectRecord> object;
};
StreamItem parse_stream_line(const json& line);

json to_json(const Event& e);
json to_json(const ObjectRecord& o);

}  // namespace octwin::ocel
