#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "octwin/action.hpp"
#include "octwin/dtim.hpp"
#include "octwin/ocel.hpp"

namespace octwin::sim {

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Weekly working calendar: the listed weekdays, open..close in UTC.
struct Calendar {
  std::set<unsigned> weekdays{1, 2, 3, 4, 5};  // 0 = Sunday
  Millis open = std::chrono::hours{9};
  Millis close = std::chrono::hours{17};

  bool is_open(Instant t) const;
};

/// Completion time of `work` started at `start` when work only progresses
/// during [open, open + shift) on calendar days.
Instant advance_work(const Calendar& cal, Millis shift, Instant start, Millis work);

struct Distribution {
  enum class Kind { exponential, constant };
  Kind kind = Kind::exponential;
  Millis mean{0};
};

struct IntRange {
  int min = 1;
  int max = 1;
};

struct ResourceSpec {
  std::string id;
  std::set<std::string> transitions;  // labels the resource can serve
  double capacity_hours = 8;          // daily shift length from opening time
  double speed = 1;                   // > 1 works faster
};

struct Scenario {
  std::string dtim = "bundled:p2p";  // "bundled:<name>" or a path
  std::uint64_t seed = 1;
  Instant start{};                     // simulation begins here (warm-up before step 0)
  StepClock steps = default_step_clock();
  Calendar business_hours;
  double arrival_rate_per_hour = 0;    // purchase requisitions per business hour
  IntRange materials_per_requisition{1, 4};
  // Business-time delays before goods and invoices become available.
  Distribution goods_lead_time{Distribution::Kind::exponential, std::chrono::hours{8}};
  Distribution invoice_lead_time{Distribution::Kind::exponential, std::chrono::hours{16}};
  std::vector<ResourceSpec> resources;
  // label -> operation id -> service time
  std::map<std::string, std::map<std::string, Distribution>> service_times;
};

Scenario scenario_from_json(const json& j);
json to_json(const Scenario& s);

/// Problems that make the scenario unusable with `dtim` under any of the
/// configurations in `possible`.
std::vector<std::string> validate(const Scenario& s, const Dtim& dtim, const std::vector<Configuration>& possible);

// Where the simulated system reads its settings from.
class ConfigurationSource {
 public:
  virtual ~ConfigurationSource() = default;
  /// Configuration in force at t; changes at exactly t are already applied.
  virtual const Configuration& at(Instant t) = 0;
  virtual std::optional<Instant> next_change_after(Instant t) const = 0;
  /// Every configuration the source may ever return.
  virtual std::vector<Configuration> possible() const = 0;
  virtual std::vector<std::pair<Instant, Configuration>> timeline() const = 0;
};

class FixedConfiguration : public ConfigurationSource {
 public:
  explicit FixedConfiguration(Configuration c) : conf_(std::move(c)) {}
  const Configuration& at(Instant) override { return conf_; }
  std::optional<Instant> next_change_after(Instant) const override { return std::nullopt; }
  std::vector<Configuration> possible() const override { return {conf_}; }
  std::vector<std::pair<Instant, Configuration>> timeline() const override { return {{Instant::min(), conf_}}; }

 private:
  Configuration conf_;
};

// Driven by an action scheduler; reading at t advances the scheduler to t.
class ScheduledConfiguration : public ConfigurationSource {
 public:
  explicit ScheduledConfiguration(Scheduler& scheduler) : scheduler_(scheduler) {}
  const Configuration& at(Instant t) override;
  std::optional<Instant> next_change_after(Instant t) const override;
  std::vector<Configuration> possible() const override;
  std::vector<std::pair<Instant, Configuration>> timeline() const override { return scheduler_.history(); }

 private:
  Scheduler& scheduler_;
};

struct RunResult {
  ocel::Log log;
  std::vector<std::pair<Instant, Configuration>> timeline;
  Marking final_marking;                        // retired objects removed
  std::map<ObjectId, AttributeMap> final_values;
  std::size_t requeued_batches = 0;             // guard failed at completion
};

/// Simulates until steps.at(horizon_steps). Throws ScenarioError if the
/// scenario does not validate.
RunResult run(const Scenario& scenario, std::shared_ptr<const Dtim> dtim, long long horizon_steps,
              ConfigurationSource& conf);

struct CaseStudy {
  std::shared_ptr<const Dtim> dtim;
  Configuration configuration;
  Scenario scenario;
  std::vector<Action> actions;
  std::vector<ActionInstance> instances;
  json metrics;  // grid rows
  json report_options;
  long long horizon_steps = 20;
};

CaseStudy load_case_study();

/// Resolves a scenario's DT-IM reference; relative paths against `base_dir`.
json load_dtim_document(const std::string& reference, const std::string& base_dir = ".");

}  // namespace octwin::sim
