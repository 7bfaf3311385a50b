#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "octwin/action.hpp"
#include "octwin/impact.hpp"
#include "octwin/ocel.hpp"
#include "octwin/replay.hpp"

namespace octwin {

struct SessionOptions {
  Millis retention = kDay * 7;
  Millis lateness{0};
  StepClock steps = default_step_clock();
  impact::ReportOptions report;
  json report_document = json::object();  // source of `report`, kept for snapshots
};

SessionOptions session_options_from_json(const json& j);

struct IngestSummary {
  std::size_t received = 0;
  std::size_t applied = 0;
  std::size_t duplicates = 0;
  std::size_t buffered = 0;  // held back by the reorder buffer
  std::vector<std::string> rejected;  // late events, with the reason
  std::vector<replay::Deviation> deviations;
  std::optional<std::string> last_event;

  void merge(const IngestSummary& other);
};

json to_json(const IngestSummary& s);

// One digital twin: a DT-IM kept in sync with a stream of events while
// actions change its configuration. Not thread-safe; callers serialize.
class TwinSession {
 public:
  using Listener = std::function<void(const std::string& kind, const json& payload)>;

  TwinSession(std::string id, std::shared_ptr<const Dtim> dtim, Configuration initial, SessionOptions options = {});

  const std::string& id() const { return id_; }
  const Dtim& dtim() const { return *dtim_; }
  std::shared_ptr<const Dtim> dtim_ptr() const { return dtim_; }
  const SessionOptions& options() const { return options_; }
  const Configuration& configuration() const { return scheduler_.configuration(); }
  const Configuration& initial_configuration() const { return initial_; }
  /// Latest instant the twin has been moved to; empty before any event.
  std::optional<Instant> clock() const;

  void define_action(Action action);
  ScheduleResult schedule(ActionInstance instance);

  void register_object(const ocel::ObjectRecord& object);
  IngestSummary ingest(const ocel::Log& log);
  IngestSummary ingest_events(const std::vector<ocel::Event>& events);
  /// NDJSON lines: object declarations and events in stream order.
  IngestSummary ingest_stream(const std::vector<ocel::StreamItem>& items);
  /// Releases whatever the reorder buffer still holds.
  IngestSummary flush();

  /// Runs action activations up to t without an event.
  void advance_to(Instant t);

  const OperationalState& state() const { return replayer_.state(); }
  const replay::Replayer& replayer() const { return replayer_; }
  const Scheduler& scheduler() const { return scheduler_; }
  std::size_t deviation_total() const { return replayer_.deviation_count(); }
  const std::optional<std::string>& last_event() const { return last_event_; }

  /// Throws std::out_of_range for unknown instances.
  impact::ImpactReport report(const std::string& instance) const;
  std::vector<impact::ImpactReport> reports() const;

  int subscribe(Listener listener);
  void unsubscribe(int token);

  json describe() const;
  json state_json() const;
  json timeline_json() const;
  json report_json(const std::string& instance) const;

  /// Everything needed to rebuild the session by replaying its inputs.
  json snapshot() const;
  static std::unique_ptr<TwinSession> restore(const json& snapshot);

 private:
  void apply(const ocel::Event& e, IngestSummary& out);
  void advance_scheduler(Instant t);
  void notify(const std::string& kind, const json& payload);

  std::string id_;
  std::shared_ptr<const Dtim> dtim_;
  Configuration initial_;
  SessionOptions options_;
  Scheduler scheduler_;
  replay::Replayer replayer_;
  replay::ReorderBuffer buffer_;
  std::set<std::string> accepted_;  // event ids seen, for idempotent re-sends
  std::optional<std::string> last_event_;
  std::map<std::string, impact::ImpactReport> reports_;
  std::vector<ActionInstance> scheduled_;
  std::map<ObjectId, ocel::ObjectRecord> objects_;
  std::vector<ocel::Event> applied_;
  std::optional<Instant> moved_to_;
  std::map<int, Listener> listeners_;
  int next_listener_ = 0;
};

}  // namespace octwin
