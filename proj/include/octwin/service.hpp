#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "octwin/twin.hpp"

namespace httplib {
class Server;
}

namespace octwin::service {

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";

  json json_body() const { return json::parse(body); }
};

// The twin registry and its resource routes. Usable in-process; the HTTP
// server only forwards requests here.
class Api {
 public:
  explicit Api(std::optional<std::string> snapshot_dir = std::nullopt);

  Response handle(const std::string& method, const std::string& path, const std::string& body = "",
                  const std::string& content_type = "application/json");

  /// Streams twin updates to `listener` until unsubscribed. Returns nullopt
  /// for unknown twins.
  std::optional<int> subscribe(const std::string& twin, TwinSession::Listener listener);
  void unsubscribe(const std::string& twin, int token);
  /// Initial messages for a new stream subscriber: current state and timeline.
  std::vector<std::pair<std::string, json>> stream_greeting(const std::string& twin);

  /// Writes one <id>.json per twin into the snapshot directory.
  std::size_t save_snapshots();
  std::size_t load_snapshots();

 private:
  struct Entry {
    std::mutex mutex;  // serializes every command on this twin
    std::unique_ptr<TwinSession> twin;
    json metrics = json::array();  // grid rows for the impacts overview
  };

  std::shared_ptr<Entry> find(const std::string& id);

  Response create_twin(const json& body);
  Response route_twin(Entry& e, const std::string& method, const std::vector<std::string>& parts,
                      const std::string& body, const std::string& content_type);

  std::optional<std::string> snapshot_dir_;
  std::mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> twins_;
  std::size_t next_id_ = 0;
};

// HTTP/SSE front for an Api.
class HttpServer {
 public:
  explicit HttpServer(Api& api);
  ~HttpServer();

  /// Binds and serves on a background thread; returns the bound port or -1.
  int start(const std::string& host, int port);
  /// Blocks serving on the calling thread.
  bool listen(const std::string& host, int port);
  void stop();

 private:
  Api& api_;
  std::unique_ptr<httplib::Server> server_;
  std::unique_ptr<std::thread> thread_;
  std::shared_ptr<std::atomic<bool>> stopping_;
};

}  // namespace octwin::service
