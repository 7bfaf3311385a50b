#include "octwin/sim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <queue>
#include <random>
#include <sstream>
#include <tuple>

#include "octwin/bundled.hpp"

namespace octwin::sim {

namespace {

using namespace std::chrono;

const std::string kRequisition = "purchase requisition";
const std::string kMaterial = "material";
const std::string kOrder = "purchase order";
const std::string kReceipt = "goods receipt";
const std::string kInvoice = "invoice";

const std::string kCreateRequisition = "create purchase requisition";
const std::string kCreateOrder = "create purchase order";
const std::string kReceiveGoods = "receive goods";
const std::string kVerify = "verify material";
const std::string kIssue = "issue material";
const std::string kReceiveInvoice = "receive invoice";
const std::string kClearInvoice = "clear invoice";

const std::vector<std::string>& labels() {
  static const std::vector<std::string> all{kCreateRequisition, kCreateOrder,    kReceiveGoods, kVerify,
                                            kIssue,             kReceiveInvoice, kClearInvoice};
  return all;
}

unsigned weekday_of(Instant t) { return weekday{floor<days>(t)}.c_encoding(); }

// Portable draws: the standard distributions differ across library vendors.
struct Rng {
  explicit Rng(std::uint64_t seed) : g(seed) {}
  std::mt19937_64 g;

  double uniform() { return static_cast<double>(g() >> 11) * 0x1.0p-53; }
  Millis draw(const Distribution& d) {
    if (d.kind == Distribution::Kind::constant) return d.mean;
    return Millis{std::llround(-static_cast<double>(d.mean.count()) * std::log1p(-uniform()))};
  }
  int between(IntRange r) { return r.min + static_cast<int>(g() % static_cast<std::uint64_t>(r.max - r.min + 1)); }
};

Distribution distribution_from_json(const json& j, const std::string& where) {
  Distribution d;
  if (j.is_number() || j.is_string()) {
    d.mean = duration_from_json(j);
    return d;
  }
  if (!j.is_object()) throw ScenarioError(where + ": expected a duration or {dist, mean}");
  auto kind = j.value("dist", std::string("exponential"));
  if (kind == "exponential") d.kind = Distribution::Kind::exponential;
  else if (kind == "constant") d.kind = Distribution::Kind::constant;
  else throw ScenarioError(where + ": unknown distribution " + kind);
  if (!j.contains("mean")) throw ScenarioError(where + ": missing mean");
  d.mean = duration_from_json(j.at("mean"));
  return d;
}

json to_json(const Distribution& d) {
  return {{"dist", d.kind == Distribution::Kind::constant ? "constant" : "exponential"},
          {"mean", to_seconds(d.mean)}};
}

Millis clock_time(const json& j) {
  // "HH:MM" or hours as a number
  if (j.is_number()) return from_seconds(j.get<double>() * 3600);
  auto s = j.get<std::string>();
  int h = 0, m = 0;
  char colon = 0;
  std::istringstream in(s);
  if (!(in >> h >> colon >> m) || colon != ':') throw ScenarioError("bad time of day " + s);
  return hours{h} + minutes{m};
}

unsigned weekday_from_string(const std::string& s) {
  static const char* names[] = {"sun", "mon", "tue", "wed", "thu", "fri", "sat"};
  for (unsigned i = 0; i < 7; ++i)
    if (s.rfind(names[i], 0) == 0) return i;
  throw ScenarioError("unknown weekday " + s);
}

}  // namespace

bool Calendar::is_open(Instant t) const {
  auto day = floor<days>(t);
  auto tod = t - Instant{day};
  return weekdays.count(weekday_of(t)) && tod >= open && tod <= close;
}

Instant advance_work(const Calendar& cal, Millis shift, Instant start, Millis work) {
  Instant t = start;
  for (;;) {
    const Instant day{floor<days>(t)};
    const Instant s = day + cal.open, e = day + cal.open + shift;
    if (!cal.weekdays.count(weekday_of(t)) || t >= e) {
      if (t == e && work.count() == 0 && cal.weekdays.count(weekday_of(t))) return t;
      t = day + days{1} + cal.open;
      continue;
    }
    if (t < s) t = s;
    const Millis avail = e - t;
    if (work <= avail) return t + work;
    work -= avail;
    t = day + days{1} + cal.open;
  }
}

Scenario scenario_from_json(const json& j) {
  if (!j.is_object()) throw ScenarioError("scenario must be an object");
  Scenario s;
  s.dtim = j.value("dtim", s.dtim);
  s.seed = j.value("seed", s.seed);
  if (j.contains("step_origin")) s.steps.origin = parse_rfc3339(j.at("step_origin").get<std::string>());
  if (j.contains("step_scale")) s.steps.scale = duration_from_json(j.at("step_scale"));
  s.start = j.contains("start") ? parse_rfc3339(j.at("start").get<std::string>()) : s.steps.origin;
  if (j.contains("business_hours")) {
    const auto& b = j.at("business_hours");
    if (b.contains("days")) {
      s.business_hours.weekdays.clear();
      for (const auto& d : b.at("days")) s.business_hours.weekdays.insert(weekday_from_string(d.get<std::string>()));
    }
    if (b.contains("open")) s.business_hours.open = clock_time(b.at("open"));
    if (b.contains("close")) s.business_hours.close = clock_time(b.at("close"));
  }
  if (j.contains("queue_discipline") && j.at("queue_discipline") != "FIFO")
    throw ScenarioError("only the FIFO queue discipline is supported");
  s.arrival_rate_per_hour = j.value("arrival_rate_per_hour", 0.0);
  if (j.contains("materials_per_requisition")) {
    const auto& m = j.at("materials_per_requisition");
    s.materials_per_requisition = {m.at("min").get<int>(), m.at("max").get<int>()};
  }
  if (j.contains("goods_lead_time")) s.goods_lead_time = distribution_from_json(j.at("goods_lead_time"), "goods_lead_time");
  if (j.contains("invoice_lead_time"))
    s.invoice_lead_time = distribution_from_json(j.at("invoice_lead_time"), "invoice_lead_time");
  for (const auto& r : j.value("resources", json::array())) {
    ResourceSpec spec;
    spec.id = r.at("id").get<std::string>();
    for (const auto& t : r.at("serves")) spec.transitions.insert(t.get<std::string>());
    spec.capacity_hours = r.value("capacity_hours", 8.0);
    spec.speed = r.value("speed", 1.0);
    s.resources.push_back(std::move(spec));
  }
  const json members_service_times = j.value("service_times", json::object());
  for (const auto& [label, ops] : members_service_times.items())
    for (const auto& [op, d] : ops.items())
      s.service_times[label][op] = distribution_from_json(d, "service_times." + label + "." + op);
  return s;
}

json to_json(const Scenario& s) {
  json j = json::object();
  j["dtim"] = s.dtim;
  j["seed"] = s.seed;
  j["start"] = format_rfc3339(s.start);
  j["step_origin"] = format_rfc3339(s.steps.origin);
  j["step_scale"] = to_seconds(s.steps.scale);
  static const char* names[] = {"sun", "mon", "tue", "wed", "thu", "fri", "sat"};
  json days = json::array();
  for (auto d : s.business_hours.weekdays) days.push_back(names[d]);
  j["business_hours"] = {{"days", days},
                         {"open", to_seconds(s.business_hours.open) / 3600},
                         {"close", to_seconds(s.business_hours.close) / 3600}};
  j["queue_discipline"] = "FIFO";
  j["arrival_rate_per_hour"] = s.arrival_rate_per_hour;
  j["materials_per_requisition"] = {{"min", s.materials_per_requisition.min}, {"max", s.materials_per_requisition.max}};
  j["goods_lead_time"] = to_json(s.goods_lead_time);
  j["invoice_lead_time"] = to_json(s.invoice_lead_time);
  j["resources"] = json::array();
  for (const auto& r : s.resources)
    j["resources"].push_back(
        {{"id", r.id}, {"serves", r.transitions}, {"capacity_hours", r.capacity_hours}, {"speed", r.speed}});
  j["service_times"] = json::object();
  for (const auto& [label, ops] : s.service_times)
    for (const auto& [op, d] : ops) j["service_times"][label][op] = to_json(d);
  return j;
}

std::vector<std::string> validate(const Scenario& s, const Dtim& dtim, const std::vector<Configuration>& possible) {
  std::vector<std::string> out;
  const auto& net = dtim.net();
  for (const auto& label : labels())
    if (!net.find_by_label(label)) out.push_back("the model has no transition labelled '" + label + "'");
  for (const auto& type : {kRequisition, kMaterial, kOrder, kReceipt, kInvoice})
    if (!net.object_types().count(type)) out.push_back("the model has no object type '" + type + "'");
  if (!out.empty()) return out;

  if (s.business_hours.weekdays.empty()) out.push_back("business calendar has no working days");
  if (s.business_hours.close <= s.business_hours.open) out.push_back("business hours close before they open");
  if (s.arrival_rate_per_hour < 0 || !std::isfinite(s.arrival_rate_per_hour)) out.push_back("arrival rate must be >= 0");
  if (s.materials_per_requisition.min < 1 || s.materials_per_requisition.max < s.materials_per_requisition.min)
    out.push_back("materials_per_requisition needs 1 <= min <= max");
  for (const auto* d : {&s.goods_lead_time, &s.invoice_lead_time})
    if (d->mean.count() < 0) out.push_back("lead times must be non-negative");
  std::set<std::string> served;
  for (const auto& r : s.resources) {
    if (!(r.speed > 0)) out.push_back("resource " + r.id + ": speed must be positive");
    if (!(r.capacity_hours > 0) || from_seconds(r.capacity_hours * 3600) > s.business_hours.close - s.business_hours.open)
      out.push_back("resource " + r.id + ": capacity must fit inside business hours");
    for (const auto& t : r.transitions) {
      if (!net.find_by_label(t)) out.push_back("resource " + r.id + " serves unknown transition '" + t + "'");
      served.insert(t);
    }
  }
  for (const auto& label : labels()) {
    if (!served.count(label)) out.push_back("no resource serves '" + label + "'");
    const auto& t = net.find_by_label(label)->id;
    for (const auto& conf : possible) {
      auto it = conf.operations.find(t);
      const std::string op = it == conf.operations.end() ? "" : it->second;
      auto st = s.service_times.find(label);
      if (st == s.service_times.end() || !st->second.count(op))
        out.push_back("no service time for '" + label + "' under operation '" + op + "'");
      else if (st->second.at(op).mean.count() <= 0)
        out.push_back("service time for '" + label + "' under '" + op + "' must be positive");
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

const Configuration& ScheduledConfiguration::at(Instant t) {
  if (t > scheduler_.clock()) scheduler_.advance_to(t);
  return scheduler_.configuration();
}

std::optional<Instant> ScheduledConfiguration::next_change_after(Instant t) const {
  auto next = scheduler_.next_activation();
  if (next && *next > t) return next;
  return std::nullopt;
}

std::vector<Configuration> ScheduledConfiguration::possible() const {
  std::vector<Configuration> out{scheduler_.history().front().second};
  for (const auto& ai : scheduler_.instances()) {
    const Action* a = scheduler_.action(ai.action);
    if (!a) continue;
    try {
      out.push_back(apply_action(scheduler_.dtim(), *a, out.front()));
    } catch (const DomainError&) {
    }
  }
  return out;
}

namespace {

struct Job {
  Instant enqueued;
  std::uint64_t seq = 0;
  std::vector<ObjectId> objects;  // the requisition and its materials; or the single object the job is about

  bool operator<(const Job& o) const { return std::tie(enqueued, seq) < std::tie(o.enqueued, o.seq); }
};

struct Resource {
  const ResourceSpec* spec = nullptr;
  Millis shift{0};
  bool busy = false;
  std::string label;
  std::vector<Job> running;
};

enum class Kind { configuration, arrival, completion, goods_ready, invoice_ready };

struct Pending {
  Instant at;
  int priority;  // configuration changes first at equal times
  std::uint64_t seq;
  Kind kind;
  std::size_t resource = 0;
  ObjectId object;

  bool operator>(const Pending& o) const {
    return std::tie(at, priority, seq) > std::tie(o.at, o.priority, o.seq);
  }
};

class Simulation {
 public:
  Simulation(const Scenario& sc, std::shared_ptr<const Dtim> dtim, ConfigurationSource& conf)
      : sc_(sc), dtim_(std::move(dtim)), net_(dtim_->net()), conf_(conf), rng_(sc.seed) {
    for (const auto& label : labels()) tid_[label] = net_.find_by_label(label)->id;
    for (const auto& r : sc_.resources) resources_.push_back({&r, from_seconds(r.capacity_hours * 3600), false, {}, {}});
  }

  RunResult run(Instant end) {
    const Instant start = sc_.start;
    conf_.at(start);
    if (auto next = conf_.next_change_after(start)) push({*next, 0, 0, Kind::configuration, 0, {}});
    if (sc_.arrival_rate_per_hour > 0) schedule_arrival(start);

    while (!agenda_.empty() && agenda_.top().at <= end) {
      Pending ev = agenda_.top();
      agenda_.pop();
      const Instant now = ev.at;
      conf_.at(now);
      switch (ev.kind) {
        case Kind::configuration:
          if (auto next = conf_.next_change_after(now)) push({*next, 0, 0, Kind::configuration, 0, {}});
          break;
        case Kind::arrival:
          on_arrival(now);
          break;
        case Kind::completion:
          on_completion(now, ev.resource);
          break;
        case Kind::goods_ready:
          enqueue(kReceiveGoods, now, {ev.object});
          break;
        case Kind::invoice_ready:
          invoice_ready_.insert(ev.object);
          if (goods_received_.count(ev.object)) enqueue(kReceiveInvoice, now, {ev.object});
          break;
      }
      dispatch(now);
    }
    RunResult out;
    out.log = std::move(log_);
    out.timeline = conf_.timeline();
    out.final_marking = state_.marking;
    out.final_values = state_.object_values;
    out.requeued_batches = requeued_;
    return out;
  }

 private:
  void push(Pending p) {
    p.seq = ++seq_;
    agenda_.push(std::move(p));
  }

  void schedule_arrival(Instant from) {
    Distribution gap{Distribution::Kind::exponential, from_seconds(3600.0 / sc_.arrival_rate_per_hour)};
    const Calendar& cal = sc_.business_hours;
    push({advance_work(cal, cal.close - cal.open, from, rng_.draw(gap)), 1, 0, Kind::arrival, 0, {}});
  }

  std::string fresh(const std::string& prefix) { return prefix + std::to_string(++counters_[prefix]); }

  void on_arrival(Instant now) {
    std::vector<ObjectId> objs{fresh("pr")};
    const int n = rng_.between(sc_.materials_per_requisition);
    for (int i = 0; i < n; ++i) objs.push_back(fresh("m"));
    materials_of_[objs.front()] = {objs.begin() + 1, objs.end()};
    enqueue(kCreateRequisition, now, std::move(objs));
    schedule_arrival(now);
  }

  void enqueue(const std::string& label, Instant now, std::vector<ObjectId> objects) {
    queues_[label].insert(Job{now, ++seq_, std::move(objects)});
  }

  double min_quantity(const Configuration& c) const {
    auto it = c.valves.find("min-quantity");
    if (it == c.valves.end() || !is_number(it->second)) return 1;
    return std::get<double>(it->second);
  }

  // Oldest requisitions until their materials reach min-quantity; empty if
  // the queue cannot satisfy it yet.
  std::vector<Job> order_batch(const Configuration& c) {
    auto& q = queues_[kCreateOrder];
    const double need = min_quantity(c);
    std::vector<Job> batch;
    double have = 0;
    for (const auto& job : q) {
      batch.push_back(job);
      have += static_cast<double>(materials_of_.at(job.objects.front()).size());
      if (have >= need) return batch;
    }
    return {};
  }

  void dispatch(Instant now) {
    const Configuration& c = conf_.at(now);
    for (std::size_t i = 0; i < resources_.size(); ++i) {
      auto& r = resources_[i];
      if (r.busy) continue;
      const std::string* best = nullptr;
      const Job* head = nullptr;
      for (const auto& label : r.spec->transitions) {
        auto& q = queues_[label];
        if (q.empty()) continue;
        if (label == kCreateOrder && order_batch(c).empty()) continue;
        if (!head || *q.begin() < *head) {
          head = &*q.begin();
          best = &label;
        }
      }
      if (!best) continue;
      const std::string label = *best;
      auto& q = queues_[label];
      std::vector<Job> jobs;
      if (label == kCreateOrder) {
        jobs = order_batch(c);
        for (const auto& j : jobs) q.erase(j);
      } else {
        jobs.push_back(*q.begin());
        q.erase(q.begin());
      }
      auto op = c.operations.find(tid_.at(label));
      const auto& dist = sc_.service_times.at(label).at(op == c.operations.end() ? "" : op->second);
      const Millis work{std::llround(static_cast<double>(rng_.draw(dist).count()) / r.spec->speed)};
      r.busy = true;
      r.label = label;
      r.running = std::move(jobs);
      push({advance_work(sc_.business_hours, r.shift, now, work), 1, 0, Kind::completion, i, {}});
    }
  }

  Value value_for(const std::string& attribute) {
    if (attribute == "requester") return "u" + std::to_string(1 + rng_.g() % 20);
    if (attribute == "supplier") return "s" + std::to_string(1 + rng_.g() % 8);
    if (attribute == "quality") return std::string(1, static_cast<char>('A' + rng_.g() % 3));
    if (attribute == "quantity") return static_cast<double>(1 + rng_.g() % 10);
    if (attribute == "amount") return std::round(rng_.uniform() * 100000) / 100;
    return 1.0;
  }

  void on_completion(Instant now, std::size_t ri) {
    auto& r = resources_[ri];
    r.busy = false;
    const std::string label = r.label;
    std::vector<Job> jobs = std::move(r.running);
    r.running.clear();
    const TransitionId& t = tid_.at(label);
    const Configuration c = conf_.at(now);

    Binding b{t, {}};
    ObjectId created;
    if (label == kCreateRequisition) {
      b.objects[kRequisition].insert(jobs[0].objects[0]);
      b.objects[kMaterial].insert(jobs[0].objects.begin() + 1, jobs[0].objects.end());
    } else if (label == kCreateOrder) {
      for (const auto& j : jobs) {
        b.objects[kRequisition].insert(j.objects[0]);
        for (const auto& m : materials_of_.at(j.objects[0])) b.objects[kMaterial].insert(m);
      }
      created = "po" + std::to_string(counters_["po"] + 1);
      b.objects[kOrder].insert(created);
    } else if (label == kReceiveGoods) {
      const auto& po = jobs[0].objects[0];
      b.objects[kOrder].insert(po);
      b.objects[kMaterial] = materials_of_po_.at(po);
      created = fresh("gr");
      b.objects[kReceipt].insert(created);
    } else if (label == kVerify || label == kIssue) {
      b.objects[kMaterial].insert(jobs[0].objects[0]);
    } else if (label == kReceiveInvoice) {
      b.objects[kOrder].insert(jobs[0].objects[0]);
      created = fresh("inv");
      b.objects[kInvoice].insert(created);
    } else if (label == kClearInvoice) {
      b.objects[kInvoice].insert(jobs[0].objects[0]);
    }

    // Objects appear in every input place of their type when first used.
    std::vector<Token> born;
    for (const auto& [type, ids] : b.objects)
      for (const auto& oi : ids) {
        if (seen_.count(oi)) continue;
        for (const auto& p : net_.inputs(t))
          if (net_.type_of(p) == type) born.push_back({p, oi});
      }
    for (const auto& tk : born) state_.marking.add(tk);

    DtBinding dtb{b, assigned_writes(*dtim_, c, t), now};
    auto en = is_dt_binding_enabled(*dtim_, c, state_, dtb);
    if (!en) {
      if (label != kCreateOrder)
        throw std::logic_error("simulator reached a disabled binding of '" + label + "': " + en.reason);
      for (const auto& tk : born) state_.marking.remove(tk);
      auto& q = queues_[kCreateOrder];
      for (auto& j : jobs) q.insert(std::move(j));
      ++requeued_;
      return;
    }
    if (label == kCreateOrder) ++counters_["po"];

    ocel::Event e{"e" + std::to_string(++events_), label, now, {}, {}};
    std::map<ObjectId, AttributeMap> written;
    for (const auto& [type, attrs] : dtb.write)
      for (const auto& a : attrs) {
        if (!e.values.count(a)) e.values[a] = value_for(a);
        for (const auto& oi : b.objects_of(type)) written[oi][a] = e.values.at(a);
      }
    state_ = apply_dt_binding(*dtim_, c, state_, dtb, written);

    for (const auto& [type, ids] : b.objects)
      for (const auto& oi : ids) {
        e.objects.push_back(oi);
        if (seen_.insert(oi).second) log_.objects[oi] = ocel::ObjectRecord{oi, type, {}};
      }
    retire(b);
    log_.events.push_back(std::move(e));

    if (label == kCreateRequisition) {
      enqueue(kCreateOrder, now, {jobs[0].objects[0]});
    } else if (label == kCreateOrder) {
      materials_of_po_[created] = b.objects.at(kMaterial);
      push({advance_work(sc_.business_hours, sc_.business_hours.close - sc_.business_hours.open, now,
                         rng_.draw(sc_.goods_lead_time)),
            1, 0, Kind::goods_ready, 0, created});
      push({advance_work(sc_.business_hours, sc_.business_hours.close - sc_.business_hours.open, now,
                         rng_.draw(sc_.invoice_lead_time)),
            1, 0, Kind::invoice_ready, 0, created});
    } else if (label == kReceiveGoods) {
      const auto& po = jobs[0].objects[0];
      for (const auto& m : materials_of_po_.at(po)) enqueue(kVerify, now, {m});
      materials_of_po_.erase(po);
      goods_received_.insert(po);
      if (invoice_ready_.count(po)) enqueue(kReceiveInvoice, now, {po});
    } else if (label == kVerify) {
      enqueue(kIssue, now, {jobs[0].objects[0]});
    } else if (label == kReceiveInvoice) {
      goods_received_.erase(jobs[0].objects[0]);
      invoice_ready_.erase(jobs[0].objects[0]);
      enqueue(kClearInvoice, now, {created});
    }
  }

  void retire(const Binding& b) {
    for (const auto& [_, ids] : b.objects)
      for (const auto& oi : ids) {
        auto toks = state_.marking.tokens_of(oi);
        if (!std::all_of(toks.begin(), toks.end(), [&](const Token& tk) { return net_.is_sink(tk.place); })) continue;
        for (const auto& tk : toks) state_.marking.remove(tk, state_.marking.count(tk));
      }
  }

  const Scenario& sc_;
  std::shared_ptr<const Dtim> dtim_;
  const Net& net_;
  ConfigurationSource& conf_;
  Rng rng_;
  std::map<std::string, TransitionId> tid_;
  std::vector<Resource> resources_;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> agenda_;
  std::map<std::string, std::set<Job>> queues_;
  std::map<std::string, std::uint64_t> counters_;
  std::map<ObjectId, std::vector<ObjectId>> materials_of_;
  std::map<ObjectId, std::set<ObjectId>> materials_of_po_;
  std::set<ObjectId> goods_received_, invoice_ready_, seen_;
  OperationalState state_;
  ocel::Log log_;
  std::uint64_t seq_ = 0, events_ = 0;
  std::size_t requeued_ = 0;
};

}  // namespace

RunResult run(const Scenario& scenario, std::shared_ptr<const Dtim> dtim, long long horizon_steps,
              ConfigurationSource& conf) {
  auto problems = validate(scenario, *dtim, conf.possible());
  if (!problems.empty()) {
    std::string msg = "invalid scenario:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ScenarioError(msg);
  }
  return Simulation(scenario, std::move(dtim), conf).run(scenario.steps.at(horizon_steps));
}

json load_dtim_document(const std::string& reference, const std::string& base_dir) {
  if (reference.rfind("bundled:", 0) == 0) return json::parse(bundled_document(reference.substr(8)));
  std::filesystem::path p(reference);
  if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
  std::ifstream in(p);
  if (!in) throw ScenarioError("cannot open DT-IM " + p.string());
  return json::parse(in);
}

CaseStudy load_case_study() {
  CaseStudy cs;
  const json model = json::parse(bundled_document("p2p"));
  cs.dtim = std::make_shared<const Dtim>(dtim_from_json(model));
  cs.configuration = *default_configuration(model);
  cs.scenario = scenario_from_json(json::parse(bundled_document("p2p_scenario")));
  const json bundle = json::parse(bundled_document("p2p_case_study"));
  for (const auto& a : bundle.at("actions")) cs.actions.push_back(action_from_json(a));
  for (const auto& ai : bundle.at("instances")) cs.instances.push_back(action_instance_from_json(ai, cs.scenario.steps));
  cs.metrics = bundle.value("metrics", json::array());
  cs.report_options = bundle.value("options", json::object());
  cs.horizon_steps = bundle.value("horizon_steps", cs.horizon_steps);
  return cs;
}

}  // namespace octwin::sim
