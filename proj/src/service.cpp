#include "octwin/service.hpp"

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "octwin/ocel.hpp"

namespace octwin::service {

namespace {

Response reply(int status, const json& body) { return {status, body.dump(), "application/json"}; }

Response error(int status, const std::string& message, const json& details = nullptr) {
  json j = {{"error", message}};
  if (!details.is_null()) j["details"] = details;
  return reply(status, j);
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  const auto q = path.find('?');
  for (char c : path.substr(0, q)) {
    if (c == '/') {
      if (!cur.empty()) parts.push_back(httplib::detail::decode_url(cur, false));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) parts.push_back(httplib::detail::decode_url(cur, false));
  return parts;
}

json issues_to_json(const std::vector<Issue>& issues) {
  json out = json::array();
  for (const auto& i : issues) out.push_back({{"severity", i.is_error() ? "error" : "warning"}, {"message", i.message}});
  return out;
}

// An OCEL batch is a single JSON object with an "ocel:events" member;
// anything else is read as NDJSON lines.
bool looks_like_ocel(const std::string& body, const std::string& content_type) {
  if (content_type.find("ndjson") != std::string::npos) return false;
  if (!json::accept(body)) return false;
  const auto j = json::parse(body);
  return j.is_object() && j.contains("ocel:events");
}

std::vector<ocel::StreamItem> parse_ndjson(const std::string& body) {
  std::vector<ocel::StreamItem> items;
  std::istringstream in(body);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ocel::ParseError("line " + std::to_string(n), e.what());
    }
    items.push_back(ocel::parse_stream_line(j));
  }
  return items;
}

}  // namespace

Api::Api(std::optional<std::string> snapshot_dir) : snapshot_dir_(std::move(snapshot_dir)) {}

std::shared_ptr<Api::Entry> Api::find(const std::string& id) {
  std::lock_guard lock(registry_mutex_);
  auto it = twins_.find(id);
  return it == twins_.end() ? nullptr : it->second;
}

Response Api::handle(const std::string& method, const std::string& path, const std::string& body,
                     const std::string& content_type) {
  const auto parts = split_path(path);
  try {
    if (parts.empty()) return error(404, "no such resource");
    if (parts.size() == 1 && parts[0] == "health" && method == "GET") {
      std::lock_guard lock(registry_mutex_);
      return reply(200, {{"status", "ok"}, {"twins", twins_.size()}});
    }
    if (parts[0] != "twins") return error(404, "no such resource");
    if (parts.size() == 1) {
      if (method == "POST") {
        json doc;
        try {
          doc = json::parse(body);
        } catch (const json::parse_error& e) {
          return error(422, std::string("request body is not JSON: ") + e.what());
        }
        return create_twin(doc);
      }
      if (method == "GET") {
        std::lock_guard lock(registry_mutex_);
        json ids = json::array();
        for (const auto& [id, _] : twins_) ids.push_back(id);
        return reply(200, {{"twins", ids}});
      }
      return error(405, "method not allowed");
    }
    auto entry = find(parts[1]);
    if (!entry) return error(404, "unknown twin " + parts[1]);
    std::lock_guard lock(entry->mutex);
    return route_twin(*entry, method, parts, body, content_type);
  } catch (const json::exception& e) {
    return error(422, e.what());
  } catch (const FormatError& e) {
    return error(422, e.what());
  } catch (const std::invalid_argument& e) {
    return error(422, e.what());
  }
}

Response Api::create_twin(const json& doc) {
  if (!doc.is_object() || !doc.contains("dtim")) return error(422, "expected {dtim, configuration}");
  std::shared_ptr<const Dtim> dtim;
  try {
    dtim = std::make_shared<const Dtim>(dtim_from_json(doc.at("dtim")));
  } catch (const FormatError& e) {
    return error(422, e.what());
  } catch (const StructuralError& e) {
    return error(422, e.what());
  }
  auto issues = validate(*dtim);
  std::optional<Configuration> conf;
  if (doc.contains("configuration")) conf = configuration_from_json(doc.at("configuration"));
  else conf = default_configuration(doc.at("dtim"));
  if (!conf) conf = Configuration{};
  auto conf_issues = validate(*dtim, *conf);
  issues.insert(issues.end(), conf_issues.begin(), conf_issues.end());
  if (error_count(issues)) return error(422, "the DT-IM does not validate", issues_to_json(issues));

  auto entry = std::make_shared<Entry>();
  std::string id;
  {
    std::lock_guard lock(registry_mutex_);
    id = doc.value("id", std::string{});
    if (id.empty()) {
      do id = "twin-" + std::to_string(++next_id_);
      while (twins_.count(id));
    } else if (twins_.count(id)) {
      return error(409, "twin " + id + " already exists");
    }
    auto opts = session_options_from_json(doc.value("options", json::object()));
    entry->twin = std::make_unique<TwinSession>(id, dtim, *conf, opts);
    entry->metrics = doc.value("metrics", json::array());
    twins_[id] = entry;
  }
  return reply(201, {{"id", id}, {"warnings", issues_to_json(issues)}});
}

Response Api::route_twin(Entry& e, const std::string& method, const std::vector<std::string>& parts,
                         const std::string& body, const std::string& content_type) {
  TwinSession& twin = *e.twin;
  const std::string sub = parts.size() > 2 ? parts[2] : "";
  auto parse_body = [&]() { return json::parse(body); };

  if (sub.empty()) {
    if (method == "GET") return reply(200, twin.describe());
    if (method == "DELETE") {
      std::lock_guard lock(registry_mutex_);
      twins_.erase(twin.id());
      return reply(200, {{"deleted", parts[1]}});
    }
    return error(405, "method not allowed");
  }

  if (sub == "events" && method == "POST") {
    try {
      IngestSummary s;
      if (looks_like_ocel(body, content_type)) s = twin.ingest(ocel::ingest(json::parse(body), &twin.dtim()));
      else s = twin.ingest_stream(parse_ndjson(body));
      if (parts.size() > 3 && parts[3] == "flush") s.merge(twin.flush());
      return reply(200, to_json(s));
    } catch (const ocel::ParseError& ex) {
      return error(422, ex.what(), {{"path", ex.path}});
    } catch (const ocel::IngestionError& ex) {
      return error(422, ex.what(), {{"ids", ex.ids}});
    }
  }
  if (sub == "flush" && method == "POST") return reply(200, to_json(twin.flush()));
  if (sub == "state" && method == "GET") return reply(200, twin.state_json());
  if (sub == "health" && method == "GET")
    return reply(200, {{"deviations", twin.deviation_total()},
                       {"last_event", twin.last_event() ? json(*twin.last_event()) : json(nullptr)}});
  if (sub == "timeline" && method == "GET") return reply(200, twin.timeline_json());

  if (sub == "actions") {
    if (method == "GET") {
      json out = json::array();
      for (const auto& [_, a] : twin.scheduler().actions()) out.push_back(to_json(a));
      return reply(200, out);
    }
    if (method == "POST") {
      auto a = action_from_json(parse_body());
      if (twin.scheduler().action(a.id)) return error(409, "action " + a.id + " already exists");
      try {
        twin.define_action(a);
      } catch (const ActionError& ex) {
        return error(422, ex.what());
      }
      return reply(201, to_json(a));
    }
  }

  if (sub == "action-instances") {
    if (method == "GET") return reply(200, twin.timeline_json().at("instances"));
    if (method == "POST") {
      auto ai = action_instance_from_json(parse_body(), twin.options().steps);
      auto r = twin.schedule(ai);
      if (!r.accepted) {
        if (!r.conflicts.empty()) return error(409, r.reason, {{"conflicts", r.conflicts}});
        return error(422, r.reason);
      }
      const ActionInstance& stored = *twin.scheduler().instance(r.instance);
      auto j = to_json(stored, &twin.options().steps);
      j["status"] = to_string(twin.scheduler().status(stored.id));
      return reply(201, j);
    }
  }

  if (sub == "impacts" && method == "GET") {
    if (parts.size() > 3) {
      try {
        return reply(200, twin.report_json(parts[3]));
      } catch (const std::out_of_range&) {
        return error(404, "unknown action instance " + parts[3]);
      }
    }
    const auto reports = twin.reports();
    const auto rows = e.metrics.empty() ? impact::default_grid(reports) : impact::grid_from_json(e.metrics);
    json rj = json::array();
    for (const auto& r : reports) rj.push_back(impact::to_json(r, &twin.options().steps));
    return reply(200, {{"reports", rj}, {"grid", impact::grid_to_json(reports, rows)}});
  }

  if (sub == "clock" && method == "POST") {
    auto j = parse_body();
    Instant t = instant_from_json(j.at("at"), twin.options().steps);
    try {
      twin.advance_to(t);
    } catch (const replay::OutOfOrderError& ex) {
      return error(409, ex.what());
    }
    return reply(200, twin.timeline_json());
  }

  if (sub == "snapshot" && method == "GET") return reply(200, twin.snapshot());

  return error(404, "no such resource");
}

std::optional<int> Api::subscribe(const std::string& twin, TwinSession::Listener listener) {
  auto e = find(twin);
  if (!e) return std::nullopt;
  std::lock_guard lock(e->mutex);
  return e->twin->subscribe(std::move(listener));
}

void Api::unsubscribe(const std::string& twin, int token) {
  auto e = find(twin);
  if (!e) return;
  std::lock_guard lock(e->mutex);
  e->twin->unsubscribe(token);
}

std::vector<std::pair<std::string, json>> Api::stream_greeting(const std::string& twin) {
  auto e = find(twin);
  if (!e) return {};
  std::lock_guard lock(e->mutex);
  return {{"state", e->twin->state_json()}, {"timeline", e->twin->timeline_json()}};
}

std::size_t Api::save_snapshots() {
  if (!snapshot_dir_) return 0;
  std::filesystem::create_directories(*snapshot_dir_);
  std::vector<std::shared_ptr<Entry>> entries;
  {
    std::lock_guard lock(registry_mutex_);
    for (const auto& [_, e] : twins_) entries.push_back(e);
  }
  for (const auto& e : entries) {
    std::lock_guard lock(e->mutex);
    json snap = e->twin->snapshot();
    snap["metrics"] = e->metrics;
    auto path = std::filesystem::path(*snapshot_dir_) / (e->twin->id() + ".json");
    std::ofstream(path) << snap.dump() << '\n';
  }
  return entries.size();
}

std::size_t Api::load_snapshots() {
  if (!snapshot_dir_ || !std::filesystem::is_directory(*snapshot_dir_)) return 0;
  std::size_t n = 0;
  for (const auto& f : std::filesystem::directory_iterator(*snapshot_dir_)) {
    if (f.path().extension() != ".json") continue;
    std::ifstream in(f.path());
    auto snap = json::parse(in);
    auto entry = std::make_shared<Entry>();
    entry->twin = TwinSession::restore(snap);
    entry->metrics = snap.value("metrics", json::array());
    std::lock_guard lock(registry_mutex_);
    twins_[entry->twin->id()] = entry;
    ++n;
  }
  return n;
}

namespace {

// Messages for one SSE connection.
struct Channel {
  std::mutex m;
  std::condition_variable cv;
  std::deque<std::string> pending;
  bool closed = false;

  void push(std::string msg) {
    {
      std::lock_guard lock(m);
      pending.push_back(std::move(msg));
    }
    cv.notify_one();
  }
};

std::string sse_message(const std::string& kind, const json& payload) {
  return "event: " + kind + "\ndata: " + payload.dump() + "\n\n";
}

}  // namespace

HttpServer::HttpServer(Api& api)
    : api_(api), server_(std::make_unique<httplib::Server>()), stopping_(std::make_shared<std::atomic<bool>>(false)) {
  auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    auto r = api_.handle(req.method, req.path, req.body, req.get_header_value("Content-Type"));
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server_->Get(R"(/twins/([^/]+)/stream)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    auto channel = std::make_shared<Channel>();
    auto token = api_.subscribe(id, [channel](const std::string& kind, const json& payload) {
      channel->push(sse_message(kind, payload));
    });
    if (!token) {
      res.status = 404;
      res.set_content(json{{"error", "unknown twin " + id}}.dump(), "application/json");
      return;
    }
    for (const auto& [kind, payload] : api_.stream_greeting(id)) channel->push(sse_message(kind, payload));
    auto stopping = stopping_;
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream",
        [channel, stopping](size_t, httplib::DataSink& sink) {
          std::unique_lock lock(channel->m);
          channel->cv.wait_for(lock, std::chrono::seconds(15),
                               [&] { return !channel->pending.empty() || stopping->load(); });
          if (stopping->load()) return false;
          if (channel->pending.empty()) {
            lock.unlock();
            return sink.write(": keep-alive\n\n", 14);
          }
          std::deque<std::string> out;
          out.swap(channel->pending);
          lock.unlock();
          for (const auto& msg : out)
            if (!sink.write(msg.data(), msg.size())) return false;
          return true;
        },
        [this, id, token](bool) { api_.unsubscribe(id, *token); });
  });
  server_->Get(".*", forward);
  server_->Post(".*", forward);
  server_->Delete(".*", forward);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) return -1;
  thread_ = std::make_unique<std::thread>([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

bool HttpServer::listen(const std::string& host, int port) { return server_->listen(host, port); }

void HttpServer::stop() {
  stopping_->store(true);
  if (server_) server_->stop();
  if (thread_ && thread_->joinable()) thread_->join();
  thread_.reset();
}

}  // namespace octwin::service
