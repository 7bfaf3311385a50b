#include <doctest.h>

#include <cmath>
#include <random>

#include "octwin/ocel.hpp"
#include "octwin/replay.hpp"
#include "oracles.hpp"

using namespace octwin;
using namespace octwin::replay;
using testing::at;
using testing::bundled_configuration;
using testing::bundled_dtim;
using testing::TraceGen;
using std::chrono::hours;
using std::chrono::minutes;

namespace {

ocel::Event event(std::string id, std::string activity, Instant t, std::vector<ObjectId> objects,
                  AttributeMap values = {}) {
  return {std::move(id), std::move(activity), t, std::move(objects), std::move(values)};
}

struct OrderTwin {
  std::shared_ptr<const Dtim> dtim = bundled_dtim("order");
  Configuration conf = bundled_configuration("order");
  Replayer r{dtim, kDay * 365};

  void declare(const ObjectId& id, const ObjectType& type) { r.register_object({id, type, {}}); }
  std::vector<Deviation> replay(const ocel::Event& e) { return r.replay_event(conf, e); }
};

std::size_t count_kind(const std::vector<Deviation>& ds, DeviationKind k) {
  return std::count_if(ds.begin(), ds.end(), [&](const Deviation& d) { return d.kind == k; });
}

}  // namespace

TEST_CASE("OCEL ingestion") {
  const auto doc = json::parse(R"({
    "ocel:global-log": {"ocel:attribute-names": [], "ocel:object-types": ["order"]},
    "ocel:events": {"e1": {"ocel:activity": "place order", "ocel:timestamp": "2021-12-20T09:00:00Z",
                           "ocel:omap": ["o1"], "ocel:vmap": {"price": 12}}},
    "ocel:objects": {"o1": {"ocel:type": "order", "ocel:ovmap": {"customer": "acme"}}}})");
  const auto log = ocel::ingest(doc);
  REQUIRE(log.events.size() == 1);
  REQUIRE(log.objects.size() == 1);
  CHECK(log.events[0].activity == "place order");
  CHECK(log.events[0].timestamp == at("2021-12-20T09:00:00Z"));
  CHECK(std::get<double>(log.events[0].values.at("price")) == 12);
  CHECK(log.objects.at("o1").type == "order");

  auto dangling = doc;
  dangling["ocel:events"]["e1"]["ocel:omap"].push_back("o99");
  try {
    ocel::ingest(dangling);
    FAIL("expected an ingestion error");
  } catch (const ocel::IngestionError& e) {
    CHECK(e.ids == std::vector<std::string>{"o99"});
    CHECK(std::string(e.what()).find("o99") != std::string::npos);
  }

  auto bad = doc;
  bad["ocel:events"]["e1"]["ocel:timestamp"] = "yesterday";
  try {
    ocel::ingest(bad);
    FAIL("expected a parse error");
  } catch (const ocel::ParseError& e) {
    CHECK(e.path.find("e1") != std::string::npos);
  }

  auto unknown = doc;
  unknown["ocel:objects"]["o1"]["ocel:type"] = "pallet";
  const auto dtim = bundled_dtim("order");
  CHECK(ocel::ingest(unknown, dtim.get()).unknown_types == std::vector<std::string>{"pallet"});
}

TEST_CASE("OCEL events come back sorted and round trip") {
  const auto doc = json::parse(R"({
    "ocel:events": {
      "e2": {"ocel:activity": "b", "ocel:timestamp": "2021-12-20T10:00:00Z", "ocel:omap": ["o1"], "ocel:vmap": {}},
      "e1": {"ocel:activity": "a", "ocel:timestamp": "2021-12-20T09:00:00Z", "ocel:omap": ["o1"], "ocel:vmap": {}}},
    "ocel:objects": {"o1": {"ocel:type": "order", "ocel:ovmap": {}}}})");
  const auto log = ocel::ingest(doc);
  CHECK(log.events[0].id == "e1");
  const auto again = ocel::ingest(ocel::to_json(log));
  CHECK(again.events.size() == 2);
  CHECK(again.events[1].id == "e2");
}

TEST_CASE("stream lines") {
  auto obj = ocel::parse_stream_line(json::parse(R"({"ocel:oid": "o1", "ocel:type": "order"})"));
  CHECK(obj.object.has_value());
  CHECK_FALSE(obj.event.has_value());
  auto ev = ocel::parse_stream_line(json::parse(
      R"({"ocel:eid": "e1", "ocel:activity": "place order", "ocel:timestamp": "2021-12-20T09:00:00Z", "ocel:omap": ["o1"]})"));
  CHECK(ev.event.has_value());
  CHECK_THROWS(ocel::parse_stream_line(json::parse(R"({"hello": 1})")));
}

TEST_CASE("place order with fresh objects") {
  OrderTwin tw;
  for (auto [id, type] : std::vector<std::pair<std::string, std::string>>{{"o1", "order"}, {"i1", "item"}, {"i2", "item"}})
    tw.declare(id, type);
  auto ds = tw.replay(event("e1", "place order", at("2021-12-20T09:00:00Z"), {"o1", "i1", "i2"}, {{"quantity", 3.0}}));
  CHECK(ds.empty());
  CHECK(tw.r.state().marking == Marking{{"po2", "o1"}, {"pi2", "i1"}, {"pi2", "i2"}});
  CHECK(std::get<double>(tw.r.state().object_values.at("i1").at("quantity")) == 3);
  CHECK(tw.r.log().births.size() == 3);
}

TEST_CASE("unknown activity leaves the state alone") {
  OrderTwin tw;
  tw.declare("o1", "order");
  tw.declare("i1", "item");
  tw.replay(event("e1", "place order", at("2021-12-20T09:00:00Z"), {"o1", "i1"}));
  const auto before = tw.r.state().marking;
  auto ds = tw.replay(event("e2", "foo", at("2021-12-20T10:00:00Z"), {"o1"}));
  REQUIRE(ds.size() == 1);
  CHECK(ds[0].kind == DeviationKind::unknown_activity);
  CHECK(tw.r.state().marking == before);
}

TEST_CASE("missing token is inserted and reported") {
  OrderTwin tw;
  for (auto [id, type] : std::vector<std::pair<std::string, std::string>>{
           {"o1", "order"}, {"o2", "order"}, {"i1", "item"}, {"i2", "item"}, {"pk1", "package"}, {"pk2", "package"}})
    tw.declare(id, type);
  tw.replay(event("e1", "place order", at("2021-12-20T09:00:00Z"), {"o1", "i1"}, {{"quantity", 5.0}}));
  tw.replay(event("e2", "place order", at("2021-12-20T09:10:00Z"), {"o2", "i2"}, {{"quantity", 5.0}}));
  CHECK(tw.replay(event("e3", "pack items", at("2021-12-20T09:20:00Z"), {"o2", "i2", "pk2"})).empty());
  // i2 has already left pi2
  auto ds = tw.replay(event("e4", "pack items", at("2021-12-20T09:30:00Z"), {"o1", "i1", "i2", "pk1"}));
  REQUIRE(count_kind(ds, DeviationKind::missing_token) == 1);
  CHECK(ds[0].object == "i2");
  CHECK(tw.r.state().marking.count({"pi3", "i2"}) == 0);  // retired: all tokens in sinks
  CHECK(tw.r.is_completed("i1"));
}

TEST_CASE("guard and write violations are flagged but applied") {
  OrderTwin tw;
  for (auto [id, type] : std::vector<std::pair<std::string, std::string>>{{"o1", "order"}, {"i1", "item"}, {"pk1", "package"}})
    tw.declare(id, type);
  tw.replay(event("e1", "place order", at("2021-12-20T09:00:00Z"), {"o1", "i1"}, {{"quantity", 2.0}}));
  auto ds = tw.replay(event("e2", "pack items", at("2021-12-20T09:30:00Z"), {"o1", "i1", "pk1"},
                            {{"delivery-date", std::string("d")}, {"weight", 4.0}}));
  CHECK(count_kind(ds, DeviationKind::guard_violation) == 1);
  CHECK(count_kind(ds, DeviationKind::write_violation) == 1);
  CHECK(tw.r.state().marking.contains({"ppk2", "pk1"}));
  CHECK(std::get<double>(tw.r.state().object_values.at("pk1").at("weight")) == 4);
}

TEST_CASE("undeclared objects and malformed bindings") {
  OrderTwin tw;
  tw.declare("o1", "order");
  auto ds = tw.replay(event("e1", "place order", at("2021-12-20T09:00:00Z"), {"o1", "ghost"}));
  CHECK(count_kind(ds, DeviationKind::invalid_binding) >= 1);
  tw.declare("o2", "order");
  ds = tw.replay(event("e2", "place order", at("2021-12-20T09:00:00Z"), {"o1", "o2"}));
  CHECK(count_kind(ds, DeviationKind::invalid_binding) == 1);
  CHECK(tw.r.state().marking.empty());
}

TEST_CASE("events must not go back in time") {
  OrderTwin tw;
  tw.declare("o1", "order");
  tw.declare("i1", "item");
  tw.replay(event("e1", "place order", at("2021-12-20T09:00:00Z"), {"o1", "i1"}));
  CHECK_THROWS_AS(tw.replay(event("e0", "place order", at("2021-12-20T08:00:00Z"), {"o1", "i1"})), OutOfOrderError);
  CHECK_THROWS_AS(tw.r.update_diagnostics(at("2021-12-20T08:00:00Z"), {}), OutOfOrderError);
}

TEST_CASE("diagnostics examples") {
  OrderTwin tw;
  const DiagnosticKey t2{DiagnosticKind::avg_sojourn_time_of_transition, "t2", kDay * 7};
  tw.r.update_diagnostics(at("2021-12-20T09:00:00Z"), {t2});
  CHECK_FALSE(diagnostics_lookup(tw.r.state(), t2).has_value());

  for (auto [id, type] : std::vector<std::pair<std::string, std::string>>{{"o1", "order"}, {"i1", "item"}, {"pk1", "package"}})
    tw.declare(id, type);
  tw.replay(event("e1", "place order", at("2021-12-20T09:00:00Z"), {"o1", "i1"}, {{"quantity", 9.0}}));
  tw.replay(event("e2", "pack items", at("2021-12-20T09:05:00Z"), {"o1", "i1", "pk1"}, {{"delivery-date", std::string("x")}}));
  tw.r.update_diagnostics(at("2021-12-20T09:05:00Z"), {t2});
  CHECK(*diagnostics_lookup(tw.r.state(), t2) == 300);
}

TEST_CASE("three executions in a window") {
  OrderTwin tw;
  // orders placed at 9:00, 9:10, 9:20; packed at 10:00, 10:30, 12:20 -> sojourns 60, 80, 180 minutes
  const char* placed[] = {"2021-12-20T09:00:00Z", "2021-12-20T09:10:00Z", "2021-12-20T09:20:00Z"};
  const char* packed[] = {"2021-12-20T10:00:00Z", "2021-12-20T10:30:00Z", "2021-12-20T12:20:00Z"};
  for (int k = 0; k < 3; ++k) {
    const auto n = std::to_string(k);
    tw.declare("o" + n, "order");
    tw.declare("i" + n, "item");
    tw.declare("pk" + n, "package");
    tw.replay(event("p" + n, "place order", at(placed[k]), {"o" + n, "i" + n}, {{"quantity", 6.0}}));
  }
  for (int k = 0; k < 3; ++k) {
    const auto n = std::to_string(k);
    tw.replay(event("k" + n, "pack items", at(packed[k]), {"o" + n, "i" + n, "pk" + n}));
  }
  const DiagnosticKey soj{DiagnosticKind::avg_sojourn_time_of_transition, "t2", kDay};
  const DiagnosticKey cnt{DiagnosticKind::count_of_executions_of_transition, "t2", kDay};
  const DiagnosticKey svc{DiagnosticKind::avg_total_service_time_of_object_type, "item", kDay};
  const DiagnosticKey last{DiagnosticKind::avg_sojourn_time_of_transition, "t2", hours{2}};
  tw.r.update_diagnostics(at("2021-12-20T12:20:00Z"), {soj, cnt, svc, last});
  CHECK(*diagnostics_lookup(tw.r.state(), soj) == doctest::Approx((60 + 80 + 180) * 60.0 / 3));
  CHECK(*diagnostics_lookup(tw.r.state(), cnt) == 3);
  CHECK(*diagnostics_lookup(tw.r.state(), svc) == doctest::Approx((60 + 80 + 180) * 60.0 / 3));
  CHECK(*diagnostics_lookup(tw.r.state(), last) == doctest::Approx((80 + 180) * 60.0 / 2));
}

TEST_CASE("property: windowed diagnostics match the timing oracle") {
  for (unsigned trace = 0; trace < 50; ++trace) {
    const auto r = testing::check_diagnostics_trace(1000 + trace, 120, 1e-9);
    CHECK(r.deviations == 0);
    CHECK(r.compared > 0);
    CHECK_MESSAGE(r.mismatches == 0, "trace " << trace);
  }
}

TEST_CASE("property: open objects equal births minus completions") {
  TraceGen gen(5);
  OrderTwin tw;
  std::set<ObjectId> born, done;
  Instant t = at("2021-12-20T09:00:00Z");
  for (int i = 0; i < 400; ++i) {
    t += minutes{7};
    auto e = gen.step(t, [&](const ObjectId& id, const ObjectType& type) { tw.declare(id, type); });
    tw.replay(e);
    for (const auto& o : e.objects) {
      born.insert(o);
      if (tw.r.is_completed(o)) done.insert(o);
    }
    if (i % 10 == 0) REQUIRE(tw.r.state().marking.objects().size() == born.size() - done.size());
  }
}

TEST_CASE("property: replay is deterministic") {
  std::vector<ocel::Event> events;
  std::vector<ocel::ObjectRecord> objects;
  TraceGen gen(77);
  Instant t = at("2021-12-20T09:00:00Z");
  for (int i = 0; i < 200; ++i) {
    t += minutes{13};
    events.push_back(gen.step(t, [&](const ObjectId& id, const ObjectType& type) { objects.push_back({id, type, {}}); }));
  }
  const std::set<DiagnosticKey> keys{{DiagnosticKind::avg_sojourn_time_of_transition, "t2", kDay},
                                     {DiagnosticKind::avg_total_service_time_of_object_type, "item", kDay}};
  auto run = [&]() {
    OrderTwin tw;
    for (const auto& o : objects) tw.r.register_object(o);
    for (const auto& e : events) tw.replay(e);
    tw.r.update_diagnostics(t, keys);
    return tw.r.state();
  };
  const auto a = run(), b = run();
  CHECK(a.marking == b.marking);
  CHECK(a.object_values == b.object_values);
  CHECK(a.diagnostics == b.diagnostics);
}

TEST_CASE("completed objects are dropped after retention") {
  auto dtim = bundled_dtim("order");
  Replayer r(dtim, hours{1});
  const auto conf = bundled_configuration("order");
  for (auto [id, type] : std::vector<std::pair<std::string, std::string>>{{"o1", "order"}, {"i1", "item"}, {"pk1", "package"}})
    r.register_object({id, type, {}});
  r.replay_event(conf, event("e1", "place order", at("2021-12-20T09:00:00Z"), {"o1", "i1"}, {{"quantity", 9.0}}));
  r.replay_event(conf, event("e2", "pack items", at("2021-12-20T09:30:00Z"), {"o1", "i1", "pk1"}));
  r.collect_garbage(at("2021-12-20T10:00:00Z"));
  CHECK(r.state().object_values.count("i1") == 1);
  r.collect_garbage(at("2021-12-20T10:31:00Z"));
  CHECK(r.state().object_values.count("i1") == 0);
  CHECK(r.state().object_values.count("pk1") == 1);  // still in ppk2
}

TEST_CASE("reorder buffer") {
  ReorderBuffer buf(minutes{10});
  CHECK(buf.push(event("a", "x", at("2021-12-20T09:05:00Z"), {"o"})).empty());
  CHECK(buf.push(event("b", "x", at("2021-12-20T09:00:00Z"), {"o"})).empty());
  auto out = buf.push(event("c", "x", at("2021-12-20T09:20:00Z"), {"o"}));
  REQUIRE(out.size() == 2);
  CHECK(out[0].id == "b");
  CHECK(out[1].id == "a");
  CHECK_THROWS_AS(buf.push(event("d", "x", at("2021-12-20T09:01:00Z"), {"o"})), OutOfOrderError);
  CHECK(buf.pending() == 1);
  CHECK(buf.flush().size() == 1);

  ReorderBuffer strict;
  CHECK(strict.push(event("a", "x", at("2021-12-20T09:05:00Z"), {"o"})).size() == 1);
  CHECK_THROWS_AS(strict.push(event("b", "x", at("2021-12-20T09:00:00Z"), {"o"})), OutOfOrderError);
}
