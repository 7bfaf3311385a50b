#include <doctest.h>

#include <httplib.h>

#include <filesystem>

#include "octwin/service.hpp"
#include "support.hpp"

using namespace octwin;
using namespace octwin::service;

namespace {

struct Request {
  std::string method, path, body, content_type = "application/json";
};

const std::string kNdjson = "application/x-ndjson";

std::string ndjson(const std::vector<json>& lines) {
  std::string out;
  for (const auto& l : lines) out += l.dump() + "\n";
  return out;
}

json twin_document() {
  return {{"id", "shop"},
          {"dtim", testing::bundled_json("order")},
          {"options", {{"step_origin", "2021-12-20T09:00:00Z"}, {"step_scale", "24h"}}}};
}

std::vector<Request> script() {
  const std::string place = ndjson({
      {{"ocel:oid", "o1"}, {"ocel:type", "order"}},
      {{"ocel:oid", "i1"}, {"ocel:type", "item"}},
      {{"ocel:oid", "i2"}, {"ocel:type", "item"}},
      {{"ocel:eid", "e1"},
       {"ocel:activity", "place order"},
       {"ocel:timestamp", "2021-12-20T10:00:00Z"},
       {"ocel:omap", {"o1", "i1", "i2"}},
       {"ocel:vmap", {{"quantity", 3}, {"price", 40}}}},
  });
  const json ocel_doc = {
      {"ocel:events",
       {{"e2",
         {{"ocel:activity", "place order"},
          {"ocel:timestamp", "2021-12-20T11:00:00Z"},
          {"ocel:omap", {"o2", "i3"}},
          {"ocel:vmap", {{"quantity", 6}}}}}}},
      {"ocel:objects", {{"o2", {{"ocel:type", "order"}}}, {"i3", {{"ocel:type", "item"}}}}}};
  return {
      {"GET", "/health", ""},
      {"POST", "/twins", twin_document().dump()},
      {"POST", "/twins", twin_document().dump()},
      {"POST", "/twins", R"({"dtim": {"places": []}})"},
      {"POST", "/twins", "not json"},
      {"GET", "/twins", ""},
      {"GET", "/twins/nope/state", ""},
      {"POST", "/twins/shop/actions", R"({"id": "A1", "edits": [{"set_valve": {"valve": "min-quantity", "value": 10}}]})"},
      {"POST", "/twins/shop/actions", R"({"id": "A1", "edits": [{"set_valve": {"valve": "min-quantity", "value": 11}}]})"},
      {"POST", "/twins/shop/actions", R"({"id": "A9", "edits": [{"set_valve": {"valve": "max", "value": 1}}]})"},
      {"GET", "/twins/shop/actions", ""},
      {"POST", "/twins/shop/action-instances", R"({"id": "AI1", "action": "A1", "start": 1, "end": 3})"},
      {"POST", "/twins/shop/action-instances", R"({"id": "AI2", "action": "A1", "start": 2, "end": 4})"},
      {"POST", "/twins/shop/action-instances", R"({"id": "AI3", "action": "A1", "start": 5, "end": 4})"},
      {"GET", "/twins/shop/action-instances", ""},
      {"GET", "/twins/shop/impacts/AI1", ""},
      {"GET", "/twins/shop/impacts/AI7", ""},
      {"POST", "/twins/shop/events", place, kNdjson},
      {"POST", "/twins/shop/events", place, kNdjson},
      {"POST", "/twins/shop/events", ocel_doc.dump()},
      {"POST", "/twins/shop/events", "{\"ocel:eid\": 3}\n", kNdjson},
      {"GET", "/twins/shop/state", ""},
      {"GET", "/twins/shop/health", ""},
      {"POST", "/twins/shop/clock", R"({"at": 0})"},
      {"POST", "/twins/shop/clock", R"({"at": 4})"},
      {"GET", "/twins/shop/impacts", ""},
      {"GET", "/twins/shop/timeline", ""},
      {"GET", "/twins/shop/nowhere", ""},
      {"DELETE", "/twins/shop", ""},
      {"GET", "/twins/shop", ""},
  };
}

Response send(httplib::Client& c, const Request& r) {
  httplib::Result res;
  if (r.method == "GET") res = c.Get(r.path);
  else if (r.method == "POST") res = c.Post(r.path, r.body, r.content_type);
  else res = c.Delete(r.path);
  REQUIRE(res);
  return {res->status, res->body, res->get_header_value("Content-Type")};
}

}  // namespace

TEST_CASE("in-process and HTTP give the same answers") {
  Api local, remote;
  HttpServer server(remote);
  const int port = server.start("127.0.0.1", 0);
  REQUIRE(port > 0);
  httplib::Client client("127.0.0.1", port);

  std::vector<Response> answers;
  for (const auto& r : script()) {
    INFO(r.method << " " << r.path);
    const auto a = local.handle(r.method, r.path, r.body, r.content_type);
    const auto b = send(client, r);
    CHECK(a.status == b.status);
    CHECK(a.body == b.body);
    answers.push_back(a);
  }
  server.stop();

  auto at = [&](std::size_t i) { return answers.at(i); };
  CHECK(at(0).status == 200);
  CHECK(at(1).status == 201);
  CHECK(at(1).json_body()["id"] == "shop");
  CHECK(at(2).status == 409);
  CHECK(at(3).status == 422);
  CHECK(at(4).status == 422);
  CHECK(at(5).json_body().size() == 1);
  CHECK(at(6).status == 404);
  CHECK(at(7).status == 201);
  CHECK(at(8).status == 409);
  CHECK(at(9).status == 422);
  CHECK(at(10).json_body().size() == 1);

  CHECK(at(11).status == 201);
  CHECK(at(11).json_body()["status"] == "scheduled");
  CHECK(at(12).status == 409);
  CHECK(at(12).json_body()["details"]["conflicts"] == json::array({"AI1"}));
  CHECK(at(13).status == 422);
  CHECK(at(14).json_body().size() == 1);

  const auto pending = at(15).json_body();
  CHECK(at(15).status == 200);
  CHECK(pending["status"] == "scheduled");
  CHECK(pending["objects_of_impacted_transitions"].empty());
  CHECK(pending["performance_available"] == false);
  CHECK(at(16).status == 404);

  CHECK(at(17).json_body()["events"] == 1);
  CHECK(at(18).json_body()["events"] == 0);
  CHECK(at(18).json_body()["duplicates"] == 1);
  CHECK(at(18).json_body()["last_event"] == "e1");
  CHECK(at(19).json_body()["events"] == 1);
  CHECK(at(20).status == 422);

  const auto state = at(21).json_body();
  CHECK(state["marking"]["pi2"] == 3);
  CHECK(state["marking"]["po2"] == 2);
  CHECK(at(22).json_body()["deviations"] == 0);
  CHECK(at(23).status == 409);
  CHECK(at(24).status == 200);

  const auto impacts = at(25).json_body();
  REQUIRE(impacts["reports"].size() == 1);
  CHECK(impacts["reports"][0]["impacted_transitions"] == json::array({"t2"}));
  CHECK(impacts["reports"][0]["objects_of_impacted_transitions"].size() == 5);
  CHECK(impacts["grid"].is_array());
  CHECK(at(27).status == 404);
  CHECK(at(28).status == 200);
  CHECK(at(29).status == 404);
}

TEST_CASE("snapshots survive a restart") {
  const auto dir = std::filesystem::temp_directory_path() / "octwin-snapshots-test";
  std::filesystem::remove_all(dir);
  std::string before;
  {
    Api api(dir.string());
    REQUIRE(api.handle("POST", "/twins", twin_document().dump()).status == 201);
    api.handle("POST", "/twins/shop/actions", R"({"id": "A1", "edits": [{"set_valve": {"valve": "min-quantity", "value": 10}}]})");
    api.handle("POST", "/twins/shop/action-instances", R"({"id": "AI1", "action": "A1", "start": 1, "end": 3})");
    api.handle("POST", "/twins/shop/events",
               ndjson({{{"ocel:oid", "o1"}, {"ocel:type", "order"}},
                       {{"ocel:oid", "i1"}, {"ocel:type", "item"}},
                       {{"ocel:eid", "e1"},
                        {"ocel:activity", "place order"},
                        {"ocel:timestamp", "2021-12-20T10:00:00Z"},
                        {"ocel:omap", {"o1", "i1"}}}}),
               kNdjson);
    before = api.handle("GET", "/twins/shop/state").body;
    CHECK(api.save_snapshots() == 1);
  }
  Api again(dir.string());
  CHECK(again.load_snapshots() == 1);
  CHECK(again.handle("GET", "/twins/shop/state").body == before);
  CHECK(again.handle("GET", "/twins/shop/action-instances").json_body().size() == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("stream greets with state and timeline, then pushes updates") {
  Api api;
  HttpServer server(api);
  const int port = server.start("127.0.0.1", 0);
  REQUIRE(port > 0);
  REQUIRE(api.handle("POST", "/twins", twin_document().dump()).status == 201);

  std::string received;
  std::thread reader([&] {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(10, 0);
    c.Get("/twins/shop/stream", [&](const char* data, size_t n) {
      received.append(data, n);
      return received.find("event: state", received.find("event: timeline")) == std::string::npos;
    });
  });
  // give the subscriber time to attach before the update
  for (int i = 0; i < 100 && api.handle("GET", "/twins/shop/health").status == 200; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    if (i == 20) api.handle("POST", "/twins/shop/clock", R"({"at": 1})");
  }
  reader.join();
  server.stop();

  const auto first_state = received.find("event: state");
  const auto timeline = received.find("event: timeline");
  REQUIRE(first_state != std::string::npos);
  REQUIRE(timeline != std::string::npos);
  CHECK(first_state < timeline);
  CHECK(received.find("event: state", timeline) != std::string::npos);
  CHECK(received.find("data: {") != std::string::npos);

  httplib::Client c("127.0.0.1", port);
  CHECK_FALSE(c.Get("/twins/shop/stream"));  // server is gone
}

TEST_CASE("unknown stream is a 404") {
  Api api;
  HttpServer server(api);
  const int port = server.start("127.0.0.1", 0);
  httplib::Client c("127.0.0.1", port);
  auto res = c.Get("/twins/ghost/stream");
  REQUIRE(res);
  CHECK(res->status == 404);
  server.stop();
}
