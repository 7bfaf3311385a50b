#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "octwin/dtim.hpp"
#include "octwin/ocel.hpp"

namespace octwin::replay {

enum class DeviationKind { missing_token, unknown_activity, guard_violation, write_violation, invalid_binding };
std::string to_string(DeviationKind k);

struct Deviation {
  std::string event;
  TransitionId transition;
  ObjectId object;
  DeviationKind kind;
  std::string detail;
};

json to_json(const Deviation& d);

// Raw bookkeeping the diagnostics are derived from. Durations are exact
// millisecond counts.
struct Execution {
  TransitionId transition;
  Instant fired_at;
  Millis sojourn;  // firing time - earliest entry of the consumed tokens
  Millis waiting;  // firing time - latest entry of the consumed tokens
};

struct Completion {
  ObjectId object;
  ObjectType type;
  Instant completed_at;
  Millis total_service;  // sum of the sojourns of the executions the object took part in
};

struct Birth {
  ObjectId object;
  ObjectType type;
  Instant born_at;
};

struct CompletionLog {
  std::deque<Execution> executions;
  std::deque<Completion> completions;
  std::deque<Birth> births;
};

// Windowed sum/count over (time, value) samples; evicting from the front
// keeps the sum exact because values are integral milliseconds.
class WindowedStat {
 public:
  void add(Instant t, Millis v);
  void evict_before(Instant cutoff);
  std::size_t count() const { return samples_.size(); }
  Millis sum() const { return sum_; }

 private:
  std::deque<std::pair<Instant, Millis>> samples_;
  Millis sum_{0};
};

struct OutOfOrderError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Token-based replay of an event stream over one DT-IM. Single writer.
class Replayer {
 public:
  explicit Replayer(std::shared_ptr<const Dtim> dtim, Millis retention = kDay * 7);

  /// Declares an object before events reference it. Redeclaring keeps the
  /// first type and merges attributes of objects not yet born.
  void register_object(const ocel::ObjectRecord& object);

  /// Replays one event. Events must arrive in non-decreasing timestamp order
  /// (OutOfOrderError otherwise). Non-conforming events still advance the
  /// state; every repair is reported as a deviation.
  std::vector<Deviation> replay_event(const Configuration& conf, const ocel::Event& event);

  /// Recomputes `keys` over the window ending at `now` into
  /// state().diagnostics. Keys without observations become undefined.
  void update_diagnostics(Instant now, const std::set<DiagnosticKey>& keys);

  /// Drops values of objects completed more than `retention` ago and log
  /// entries no tracked window can reach.
  void collect_garbage(Instant now);

  /// Keeps at least `horizon` of raw log so keys registered later can still
  /// look back that far.
  void keep_log(Millis horizon) { log_horizon_ = std::max(log_horizon_, horizon); }

  const OperationalState& state() const { return state_; }
  const CompletionLog& log() const { return log_; }
  const Dtim& dtim() const { return *dtim_; }
  std::optional<ObjectType> type_of(const ObjectId& id) const;
  std::optional<Instant> clock() const { return clock_; }
  bool is_completed(const ObjectId& id) const { return completed_.count(id) != 0; }
  std::size_t deviation_count() const { return deviation_count_; }

 private:
  void record_execution(const Execution& x);
  void record_completion(const Completion& c);
  void record_birth(const Birth& b);
  WindowedStat& tracker(const DiagnosticKey& key);

  std::shared_ptr<const Dtim> dtim_;
  Millis retention_;
  Millis log_horizon_{0};
  OperationalState state_;
  CompletionLog log_;
  std::optional<Instant> clock_;
  std::map<ObjectId, ocel::ObjectRecord> declared_;
  std::set<ObjectId> born_;
  std::set<ObjectId> completed_;
  std::multimap<Instant, ObjectId> expiry_;
  std::map<Token, std::deque<Instant>> entry_times_;
  std::map<ObjectId, Millis> service_;
  std::map<DiagnosticKey, WindowedStat> trackers_;
  std::size_t deviation_count_ = 0;

  friend class ReplayerTestAccess;
};

/// Holds events back until they are `lateness` behind the newest timestamp
/// seen, then releases them in order. Events older than something already
/// released are rejected with OutOfOrderError.
class ReorderBuffer {
 public:
  explicit ReorderBuffer(Millis lateness = Millis{0}) : lateness_(lateness) {}

  std::vector<ocel::Event> push(ocel::Event e);
  std::vector<ocel::Event> flush();
  std::size_t pending() const { return pending_.size(); }

 private:
  Millis lateness_;
  std::multimap<Instant, ocel::Event> pending_;
  std::optional<Instant> newest_;
  std::optional<Instant> released_;
};

}  // namespace octwin::replay
