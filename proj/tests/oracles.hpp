#pragma once

// Test-side oracles shared by the unit tests and the acceptance binary. None
// of these call the library function they are compared against.

#include <cmath>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "octwin/action.hpp"
#include "octwin/guard.hpp"
#include "octwin/ocel.hpp"
#include "octwin/replay.hpp"
#include "support.hpp"

namespace testing {

// ---- nets

// Required token multiset of a binding, built from the arc list only.
inline std::map<Token, std::size_t> required_tokens(const Net& net, const Binding& b) {
  std::map<Token, std::size_t> need;
  for (const auto& a : net.arcs()) {
    if (a.target != b.transition) continue;
    for (const auto& o : b.objects_of(net.type_of(a.source))) ++need[{a.source, o}];
  }
  return need;
}

inline bool brute_force_enabled(const Net& net, const Marking& m, const Binding& b) {
  for (const auto& [tk, n] : required_tokens(net, b))
    if (m.count(tk) < n) return false;
  return true;
}

// Places with a directed path into t.
inline std::set<PlaceId> upstream_places(const Net& net, const TransitionId& t) {
  std::set<std::string> seen;
  std::queue<std::string> todo;
  todo.push(t);
  while (!todo.empty()) {
    auto node = todo.front();
    todo.pop();
    for (const auto& a : net.arcs())
      if (a.target == node && seen.insert(a.source).second) todo.push(a.source);
  }
  std::set<PlaceId> out;
  for (const auto& n : seen)
    if (net.has_place(n)) out.insert(n);
  return out;
}

// Token-by-token scans of the marking.
inline std::set<ObjectId> scan_types(const Net& net, const Marking& m, const std::set<ObjectType>& types) {
  std::set<ObjectId> out;
  for (const auto& [tk, n] : m.counts())
    if (n > 0 && types.count(net.type_of(tk.place))) out.insert(tk.object);
  return out;
}

inline std::set<ObjectId> scan_transitions(const Net& net, const Marking& m, const std::set<TransitionId>& ts) {
  std::set<PlaceId> places;
  for (const auto& t : ts)
    for (const auto& p : upstream_places(net, t)) places.insert(p);
  std::set<ObjectId> out;
  for (const auto& [tk, n] : m.counts())
    if (n > 0 && places.count(tk.place)) out.insert(tk.object);
  return out;
}

// ---- guard formulas

// Formula over boolean atoms a0..a3, each written "aK = 1".
struct Tree {
  enum Kind { atom, truth, negation, conjunction, disjunction } kind;
  int var = 0;
  std::vector<Tree> kids;
};

inline Tree random_tree(std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> kind(0, depth <= 0 ? 1 : 4), var(0, 3);
  switch (kind(rng)) {
    case 0: return {Tree::atom, var(rng), {}};
    case 1: return depth <= 0 || std::bernoulli_distribution(0.3)(rng) ? Tree{Tree::truth, 0, {}}
                                                                       : Tree{Tree::atom, var(rng), {}};
    case 2: return {Tree::negation, 0, {random_tree(rng, depth - 1)}};
    case 3: return {Tree::conjunction, 0, {random_tree(rng, depth - 1), random_tree(rng, depth - 1)}};
    default: return {Tree::disjunction, 0, {random_tree(rng, depth - 1), random_tree(rng, depth - 1)}};
  }
}

// Fully parenthesized text, independent of the library's printer.
inline std::string render(const Tree& t) {
  switch (t.kind) {
    case Tree::atom: return "a" + std::to_string(t.var) + " = 1";
    case Tree::truth: return "true";
    case Tree::negation: return "not (" + render(t.kids[0]) + ")";
    case Tree::conjunction: return "(" + render(t.kids[0]) + ") and (" + render(t.kids[1]) + ")";
    case Tree::disjunction: return "(" + render(t.kids[0]) + ") or (" + render(t.kids[1]) + ")";
  }
  return "";
}

inline bool truth(const Tree& t, unsigned bits) {
  switch (t.kind) {
    case Tree::atom: return (bits >> t.var) & 1u;
    case Tree::truth: return true;
    case Tree::negation: return !truth(t.kids[0], bits);
    case Tree::conjunction: return truth(t.kids[0], bits) && truth(t.kids[1], bits);
    case Tree::disjunction: return truth(t.kids[0], bits) || truth(t.kids[1], bits);
  }
  return false;
}

inline guard::EvaluationContext assignment(unsigned bits) {
  guard::EvaluationContext ctx;
  for (int v = 0; v < 4; ++v) ctx.valves["a" + std::to_string(v)] = static_cast<double>((bits >> v) & 1u);
  return ctx;
}

// Random formula with richer terms for round-tripping.
inline guard::Formula random_formula(std::mt19937& rng, int depth) {
  using namespace guard;
  std::uniform_int_distribution<int> pick(0, 4);
  auto term = [&]() -> Term {
    static const char* names[] = {"min-quantity", "limit", "x_1"};
    static const char* types[] = {"item", "purchase-order", "m"};
    static const char* attrs[] = {"quantity", "id", "delivery-date"};
    std::uniform_int_distribution<int> i3(0, 2);
    switch (pick(rng)) {
      case 0: return ValveRef{names[i3(rng)]};
      case 1: return AttrRef{types[i3(rng)], attrs[i3(rng)]};
      case 2: return Aggregate{static_cast<AggregateFn>(pick(rng)), types[i3(rng)], attrs[i3(rng)]};
      case 3: return NumberLiteral{std::uniform_int_distribution<int>(-50, 50)(rng) / 4.0};
      default: return StringLiteral{std::string("s\"") + names[i3(rng)]};
    }
  };
  const int k = depth <= 0 ? std::uniform_int_distribution<int>(0, 1)(rng) : pick(rng);
  switch (k) {
    case 0: return Formula::truth();
    case 1: return Formula::compare(term(), static_cast<RelOp>(std::uniform_int_distribution<int>(0, 5)(rng)), term());
    case 2: return Formula::negate(random_formula(rng, depth - 1));
    case 3: return Formula::conjoin(random_formula(rng, depth - 1), random_formula(rng, depth - 1));
    default: return Formula::disjoin(random_formula(rng, depth - 1), random_formula(rng, depth - 1));
  }
}

// ---- configurations and actions

// Compares two full configurations entry by entry.
inline EffectiveChange configuration_diff(const Dtim& dtim, const Configuration& a, const Configuration& b) {
  EffectiveChange c;
  for (const auto& v : dtim.valves())
    if (a.valves.count(v.name) != b.valves.count(v.name) ||
        (a.valves.count(v.name) && a.valves.at(v.name) != b.valves.at(v.name)))
      c.valves.insert(v.name);
  for (const auto& t : dtim.net().transitions()) {
    auto ia = a.operations.find(t.id), ib = b.operations.find(t.id);
    const std::string oa = ia == a.operations.end() ? "" : ia->second;
    const std::string ob = ib == b.operations.end() ? "" : ib->second;
    if (oa != ob) c.transitions.insert(t.id);
  }
  return c;
}

inline Configuration random_configuration(std::mt19937& rng, const Dtim& dtim) {
  Configuration c;
  for (const auto& v : dtim.valves())
    c.valves[v.name] = std::floor(std::uniform_real_distribution<double>(v.domain.min, v.domain.max)(rng));
  std::vector<std::string> ops;
  for (const auto& [id, _] : dtim.operations()) ops.push_back(id);
  for (const auto& t : dtim.net().transitions())
    if (std::bernoulli_distribution(0.8)(rng))
      c.operations[t.id] = ops[std::uniform_int_distribution<std::size_t>(0, ops.size() - 1)(rng)];
  return c;
}

inline Action random_action(std::mt19937& rng, const Dtim& dtim, const std::string& id) {
  Action a{id, {}};
  for (const auto& v : dtim.valves())
    if (std::bernoulli_distribution(0.5)(rng))
      a.edits.push_back(SetValve{v.name, std::floor(std::uniform_real_distribution<double>(v.domain.min, v.domain.max)(rng))});
  std::vector<std::string> ops;
  for (const auto& [oid, _] : dtim.operations()) ops.push_back(oid);
  for (const auto& t : dtim.net().transitions())
    if (std::bernoulli_distribution(0.3)(rng))
      a.edits.push_back(AssignOperation{t.id, ops[std::uniform_int_distribution<std::size_t>(0, ops.size() - 1)(rng)]});
  return a;
}

// ---- timing of conforming traces on the order model

struct OracleExec {
  TransitionId t;
  Instant at;
  Millis sojourn, waiting;
};
struct OracleCompletion {
  ObjectType type;
  Instant at;
  Millis service;
};
struct OracleBirth {
  ObjectType type;
  Instant at;
};

struct TimingOracle {
  std::vector<OracleExec> execs;
  std::vector<OracleCompletion> completions;
  std::vector<OracleBirth> births;

  std::optional<double> value(const DiagnosticKey& k, Instant now) const {
    const Instant from = now - k.window;
    double sum = 0;
    std::size_t n = 0;
    auto in = [&](Instant t) { return t >= from && t <= now; };
    switch (k.kind) {
      case DiagnosticKind::avg_sojourn_time_of_transition:
      case DiagnosticKind::avg_waiting_time_of_transition:
      case DiagnosticKind::count_of_executions_of_transition:
        for (const auto& x : execs)
          if (x.t == k.target && in(x.at)) {
            ++n;
            sum += to_seconds(k.kind == DiagnosticKind::avg_waiting_time_of_transition ? x.waiting : x.sojourn);
          }
        break;
      case DiagnosticKind::avg_total_service_time_of_object_type:
        for (const auto& c : completions)
          if (c.type == k.target && in(c.at)) ++n, sum += to_seconds(c.service);
        break;
      case DiagnosticKind::count_of_objects_of_type:
        for (const auto& b : births)
          if (b.type == k.target && in(b.at)) ++n;
        break;
    }
    if (n == 0) return std::nullopt;
    if (k.kind == DiagnosticKind::count_of_executions_of_transition || k.kind == DiagnosticKind::count_of_objects_of_type)
      return static_cast<double>(n);
    return sum / static_cast<double>(n);
  }
};

// Random conforming trace: orders are placed with fresh items, packed with a
// fresh package, packages delivered. Timing is tracked here, not by the library.
struct TraceGen {
  std::mt19937 rng;
  int next = 0;
  struct Order {
    ObjectId order;
    std::vector<ObjectId> items;
    Instant placed;
  };
  std::vector<Order> placed;
  std::vector<std::pair<ObjectId, Instant>> packed;  // package, entered ppk2
  std::map<ObjectId, Millis> service;
  TimingOracle oracle;

  explicit TraceGen(unsigned seed) : rng(seed) {}

  std::string fresh(const char* prefix) { return prefix + std::to_string(++next); }

  static ocel::Event event(std::string id, std::string activity, Instant t, std::vector<ObjectId> objects,
                           AttributeMap values = {}) {
    return {std::move(id), std::move(activity), t, std::move(objects), std::move(values)};
  }

  // Returns the event and declares its new objects through `declare`.
  template <class Declare>
  ocel::Event step(Instant t, Declare&& declare) {
    std::uniform_int_distribution<int> pick(0, 2);
    int kind = pick(rng);
    if (kind == 1 && placed.empty()) kind = 0;
    if (kind == 2 && packed.empty()) kind = placed.empty() ? 0 : 1;
    const std::string eid = fresh("e");
    if (kind == 0) {
      Order o{fresh("o"), {}, t};
      declare(o.order, "order");
      const int n = std::uniform_int_distribution<int>(1, 3)(rng);
      for (int i = 0; i < n; ++i) {
        o.items.push_back(fresh("i"));
        declare(o.items.back(), "item");
      }
      std::vector<ObjectId> objs = o.items;
      objs.push_back(o.order);
      oracle.execs.push_back({"t1", t, Millis{0}, Millis{0}});
      oracle.births.push_back({"order", t});
      for (std::size_t i = 0; i < o.items.size(); ++i) oracle.births.push_back({"item", t});
      for (const auto& x : objs) service[x] += Millis{0};
      placed.push_back(o);
      return event(eid, "place order", t, objs, {{"quantity", 5.0}, {"price", 10.0}});
    }
    if (kind == 1) {
      const auto idx = std::uniform_int_distribution<std::size_t>(0, placed.size() - 1)(rng);
      Order o = placed[idx];
      placed.erase(placed.begin() + static_cast<long>(idx));
      const ObjectId pk = fresh("pk");
      declare(pk, "package");
      const Millis sojourn = t - o.placed;  // every consumed token entered at placement; the package is newborn
      oracle.execs.push_back({"t2", t, sojourn, sojourn});
      oracle.births.push_back({"package", t});
      std::vector<ObjectId> objs = o.items;
      objs.push_back(o.order);
      objs.push_back(pk);
      for (const auto& x : objs) service[x] += sojourn;
      for (const auto& x : o.items) oracle.completions.push_back({"item", t, service[x]});
      oracle.completions.push_back({"order", t, service[o.order]});
      packed.push_back({pk, t});
      return event(eid, "pack items", t, objs, {{"delivery-date", std::string("soon")}});
    }
    const auto idx = std::uniform_int_distribution<std::size_t>(0, packed.size() - 1)(rng);
    auto [pk, entered] = packed[idx];
    packed.erase(packed.begin() + static_cast<long>(idx));
    const Millis sojourn = t - entered;
    oracle.execs.push_back({"t3", t, sojourn, sojourn});
    service[pk] += sojourn;
    oracle.completions.push_back({"package", t, service[pk]});
    return event(eid, "deliver package", t, {pk}, {{"weight", 2.5}});
  }
};

inline std::set<DiagnosticKey> random_keys(std::mt19937& rng) {
  using std::chrono::hours;
  std::set<DiagnosticKey> keys;
  const Millis windows[] = {hours{1}, hours{6}, kDay, kDay * 3};
  const auto always = std::uniform_int_distribution<std::size_t>(0, 3)(rng);
  for (std::size_t i = 0; i < 4; ++i) {
    const Millis w = windows[i];
    if (i != always && !std::bernoulli_distribution(0.7)(rng)) continue;
    for (const char* t : {"t1", "t2", "t3"}) {
      keys.insert({DiagnosticKind::avg_sojourn_time_of_transition, t, w});
      keys.insert({DiagnosticKind::avg_waiting_time_of_transition, t, w});
      keys.insert({DiagnosticKind::count_of_executions_of_transition, t, w});
    }
    for (const char* ot : {"item", "order", "package"}) {
      keys.insert({DiagnosticKind::avg_total_service_time_of_object_type, ot, w});
      keys.insert({DiagnosticKind::count_of_objects_of_type, ot, w});
    }
  }
  return keys;
}

inline bool relatively_close(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max(1.0, std::max(std::fabs(a), std::fabs(b)));
}

// Replays one trace of `events` steps against a fresh replayer and compares
// every key at a few query points. Returns the number of mismatches.
struct DiagnosticsTraceResult {
  std::size_t compared = 0;
  std::size_t mismatches = 0;
  std::size_t deviations = 0;
};

inline DiagnosticsTraceResult check_diagnostics_trace(unsigned seed, int events, double tol) {
  std::mt19937 rng(seed);
  TraceGen gen(seed * 7919u + 1);
  replay::Replayer r(bundled_dtim("order"), kDay * 365);
  const auto conf = bundled_configuration("order");
  Instant t = parse_rfc3339("2021-12-20T09:00:00Z");
  const auto keys = random_keys(rng);
  DiagnosticsTraceResult out;
  for (int i = 0; i < events; ++i) {
    t += Millis{std::uniform_int_distribution<long long>(0, 3 * 3600 * 1000)(rng)};
    auto e = gen.step(t, [&](const ObjectId& id, const ObjectType& type) { r.register_object({id, type, {}}); });
    out.deviations += r.replay_event(conf, e).size();
    if (i % 7 == 0 || i + 1 == events) {
      const Instant now = t + Millis{std::uniform_int_distribution<long long>(0, 3600 * 1000)(rng)};
      r.update_diagnostics(now, keys);
      r.collect_garbage(now);
      for (const auto& k : keys) {
        const auto expected = gen.oracle.value(k, now);
        const auto got = diagnostics_lookup(r.state(), k);
        ++out.compared;
        if (expected.has_value() != got.has_value() || (expected && !relatively_close(*expected, *got, tol)))
          ++out.mismatches;
      }
      t = now;
    }
  }
  return out;
}

}  // namespace testing
