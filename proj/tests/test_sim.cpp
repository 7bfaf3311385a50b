#include <doctest.h>

#include <random>

#include "octwin/replay.hpp"
#include "octwin/sim.hpp"
#include "support.hpp"

using namespace octwin;
using namespace octwin::sim;
using testing::at;
using std::chrono::hours;
using std::chrono::minutes;

namespace {

Scenario bundled_scenario() { return scenario_from_json(testing::bundled_json("p2p_scenario")); }

RunResult simulate(const Scenario& sc, long long steps, double min_quantity = 1) {
  auto dtim = testing::bundled_dtim("p2p");
  auto conf = testing::bundled_configuration("p2p");
  conf.valves["min-quantity"] = min_quantity;
  FixedConfiguration source(conf);
  return run(sc, dtim, steps, source);
}

unsigned weekday(Instant t) {
  return std::chrono::weekday(std::chrono::floor<std::chrono::days>(t)).c_encoding();
}
Millis time_of_day(Instant t) { return t - std::chrono::floor<std::chrono::days>(t); }

// Business time between a and b, counted in whole minutes of open shifts.
Millis open_time_between(Instant a, Instant b, Millis open, Millis shift) {
  Millis total{0};
  for (auto day = std::chrono::floor<std::chrono::days>(a); Instant{day} <= b; day += std::chrono::days{1}) {
    const auto wd = std::chrono::weekday(day).c_encoding();
    if (wd == 0 || wd == 6) continue;
    const Instant s = std::max(Instant{day} + open, a), e = std::min(Instant{day} + open + shift, b);
    if (e > s) total += e - s;
  }
  return total;
}

std::size_t materials_in(const ocel::Log& log, const ocel::Event& e) {
  return std::count_if(e.objects.begin(), e.objects.end(),
                       [&](const ObjectId& o) { return log.objects.at(o).type == "material"; });
}

}  // namespace

TEST_CASE("calendar") {
  Calendar cal;
  CHECK(cal.is_open(at("2021-12-20T09:00:00Z")));   // Monday
  CHECK(cal.is_open(at("2021-12-20T17:00:00Z")));
  CHECK_FALSE(cal.is_open(at("2021-12-20T17:00:01Z")));
  CHECK_FALSE(cal.is_open(at("2021-12-18T12:00:00Z")));  // Saturday

  CHECK(advance_work(cal, hours{8}, at("2021-12-20T08:00:00Z"), hours{1}) == at("2021-12-20T10:00:00Z"));
  CHECK(advance_work(cal, hours{8}, at("2021-12-24T16:00:00Z"), hours{2}) == at("2021-12-27T10:00:00Z"));
  CHECK(advance_work(cal, hours{4}, at("2021-12-20T12:00:00Z"), hours{1}) == at("2021-12-20T13:00:00Z"));
  CHECK(advance_work(cal, hours{4}, at("2021-12-20T12:00:00Z"), hours{2}) == at("2021-12-21T10:00:00Z"));
  CHECK(advance_work(cal, hours{8}, at("2021-12-20T10:00:00Z"), Millis{0}) == at("2021-12-20T10:00:00Z"));
}

TEST_CASE("property: work only progresses inside shifts") {
  Calendar cal;
  std::mt19937 rng(4);
  for (int i = 0; i < 500; ++i) {
    const Instant start = at("2021-12-01T00:00:00Z") + minutes{std::uniform_int_distribution<int>(0, 60 * 24 * 30)(rng)};
    const Millis shift = hours{std::uniform_int_distribution<int>(1, 8)(rng)};
    const Millis work = minutes{std::uniform_int_distribution<int>(0, 60 * 30)(rng)};
    const Instant end = advance_work(cal, shift, start, work);
    REQUIRE(end >= start);
    REQUIRE(open_time_between(start, end, cal.open, shift) == work);
    if (work.count() > 0) {
      REQUIRE(weekday(end) >= 1);
      REQUIRE(weekday(end) <= 5);
      REQUIRE(time_of_day(end) > cal.open);
      REQUIRE(time_of_day(end) <= cal.open + shift);
    }
  }
}

TEST_CASE("generated events respect business hours") {
  const auto r = simulate(bundled_scenario(), 10);
  REQUIRE(r.log.events.size() > 100);
  for (const auto& e : r.log.events) {
    INFO(e.id << " " << format_rfc3339(e.timestamp));
    REQUIRE(weekday(e.timestamp) >= 1);
    REQUIRE(weekday(e.timestamp) <= 5);
    REQUIRE(time_of_day(e.timestamp) >= hours{9});
    REQUIRE(time_of_day(e.timestamp) <= hours{17});
  }
  CHECK(std::is_sorted(r.log.events.begin(), r.log.events.end(),
                       [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; }));
}

TEST_CASE("requisitions are served first come first served") {
  auto sc = bundled_scenario();
  // a single requisition clerk makes service order observable
  std::erase_if(sc.resources, [](const ResourceSpec& r) { return r.id == "r02" || r.id == "r03"; });
  const auto r = simulate(sc, 8);
  std::vector<int> order;
  for (const auto& e : r.log.events)
    if (e.activity == "create purchase requisition")
      for (const auto& o : e.objects)
        if (o.rfind("pr", 0) == 0) order.push_back(std::stoi(o.substr(2)));
  REQUIRE(order.size() > 20);
  CHECK(std::is_sorted(order.begin(), order.end()));
  CHECK(order.front() == 1);
  CHECK(order.back() == static_cast<int>(order.size()));
}

TEST_CASE("same seed, same log") {
  const auto sc = bundled_scenario();
  const auto a = ocel::to_json(simulate(sc, 6).log).dump();
  const auto b = ocel::to_json(simulate(sc, 6).log).dump();
  CHECK(a == b);
  auto other = sc;
  other.seed += 1;
  CHECK(ocel::to_json(simulate(other, 6).log).dump() != a);
}

TEST_CASE("no arrivals, no events") {
  auto sc = bundled_scenario();
  sc.arrival_rate_per_hour = 0;
  const auto r = simulate(sc, 10);
  CHECK(r.log.events.empty());
  CHECK(r.final_marking.empty());
}

TEST_CASE("every requisition is eventually ordered") {
  const auto sc = bundled_scenario();
  const auto r = simulate(sc, 30);
  const Instant cutoff = sc.steps.at(25);
  std::set<ObjectId> created, ordered;
  for (const auto& e : r.log.events)
    for (const auto& o : e.objects) {
      if (r.log.objects.at(o).type != "purchase requisition") continue;
      if (e.activity == "create purchase requisition" && e.timestamp < cutoff) created.insert(o);
      if (e.activity == "create purchase order") ordered.insert(o);
    }
  REQUIRE(created.size() > 100);
  for (const auto& pr : created) CHECK_MESSAGE(ordered.count(pr), pr);
}

TEST_CASE("orders batch at least min-quantity materials") {
  const auto r = simulate(bundled_scenario(), 10, 6);
  std::size_t orders = 0;
  for (const auto& e : r.log.events)
    if (e.activity == "create purchase order") {
      ++orders;
      CHECK(materials_in(r.log, e) >= 6);
    }
  CHECK(orders > 5);
}

TEST_CASE("the simulated log replays without deviations") {
  const auto r = simulate(bundled_scenario(), 8);
  auto dtim = testing::bundled_dtim("p2p");
  const auto conf = testing::bundled_configuration("p2p");
  replay::Replayer rep(dtim, kDay * 30);
  for (const auto& [_, o] : r.log.objects) rep.register_object(o);
  std::size_t deviations = 0;
  for (const auto& e : r.log.events) deviations += rep.replay_event(conf, e).size();
  CHECK(deviations == 0);
  CHECK(rep.state().marking == r.final_marking);
}

TEST_CASE("scenario validation") {
  auto dtim = testing::bundled_dtim("p2p");
  const auto conf = testing::bundled_configuration("p2p");
  CHECK(validate(bundled_scenario(), *dtim, {conf}).empty());

  auto sc = bundled_scenario();
  sc.service_times.at("verify material").erase("op4");
  CHECK(validate(sc, *dtim, {conf}).size() == 1);

  sc = bundled_scenario();
  sc.resources.push_back({"r99", {"dance"}, 8, 1});
  CHECK(validate(sc, *dtim, {conf}).size() == 1);

  sc = bundled_scenario();
  sc.resources[0].capacity_hours = 12;
  CHECK(validate(sc, *dtim, {conf}).size() == 1);

  sc = bundled_scenario();
  std::erase_if(sc.resources, [](const ResourceSpec& r) { return r.transitions.count("clear invoice"); });
  CHECK(validate(sc, *dtim, {conf}).size() == 1);
  CHECK_THROWS_AS(simulate(sc, 1), ScenarioError);

  CHECK(error_count(octwin::validate(*dtim)) == 0);
  CHECK_FALSE(validate(bundled_scenario(), *testing::bundled_dtim("order"), {}).empty());

  auto doc = testing::bundled_json("p2p_scenario");
  doc["queue_discipline"] = "LIFO";
  CHECK_THROWS_AS(scenario_from_json(doc), ScenarioError);
  doc = testing::bundled_json("p2p_scenario");
  doc["goods_lead_time"]["dist"] = "pareto";
  CHECK_THROWS_AS(scenario_from_json(doc), ScenarioError);
}

TEST_CASE("scenario round trip") {
  const auto sc = bundled_scenario();
  const auto again = scenario_from_json(to_json(sc));
  CHECK(to_json(again) == to_json(sc));
  CHECK(again.business_hours.weekdays == sc.business_hours.weekdays);
  CHECK(again.service_times.at("verify material").at("op5").mean == minutes{60});
}
