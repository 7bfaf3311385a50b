#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "octwin/action.hpp"
#include "octwin/dtim.hpp"

namespace octwin::impact {

std::set<ObjectType> impacted_object_types(const Dtim& dtim, const EffectiveChange& change,
                                           const Configuration& before, const Configuration& after);

std::set<TransitionId> impacted_transitions(const Dtim& dtim, const EffectiveChange& change);

std::set<ObjectId> objects_of_impacted_object_types(const Dtim& dtim, const Marking& at_start,
                                                    const std::set<ObjectType>& types);

std::set<ObjectId> objects_of_impacted_transitions(const Dtim& dtim, const Marking& at_start,
                                                   const std::set<TransitionId>& transitions);

enum class ScoreMode { absolute, relative };

struct ScoreSpec {
  ScoreMode mode = ScoreMode::absolute;
  std::function<bool(const std::string&)> filter;   // empty: keep everything
  std::function<double(const std::string&)> weight;  // empty: 1 per entity
};

/// Weighted count of the filtered entities; relative mode divides by the
/// weighted filtered universe (0/0 gives 0). Throws std::invalid_argument on
/// negative weights or, in relative mode, entities outside the universe.
double score(const std::set<std::string>& entities, const std::set<std::string>& universe, const ScoreSpec& spec);

/// end - start; nullopt if either side is undefined.
std::optional<double> performance_delta(const OperationalState& at_end, const OperationalState& at_start,
                                        const DiagnosticKey& key);

enum class Metric {
  impacted_object_types,
  impacted_transitions,
  objects_of_impacted_object_types,
  objects_of_impacted_transitions,
};

std::string to_string(Metric m);
Metric metric_from_string(const std::string& s);

// A user-defined score over one of the four impact sets.
struct NamedScore {
  std::string name;
  Metric metric = Metric::impacted_object_types;
  ScoreMode mode = ScoreMode::absolute;
  std::optional<std::set<std::string>> include;  // entity names (types or transitions)
  std::optional<guard::Formula> object_filter;   // objects only; evaluated with the object bound alone
  std::map<std::string, double> weights;         // by entity name, or by object type for objects
  double queue_weight = 1;                       // objects waiting in an input place of an impacted transition
};

NamedScore named_score_from_json(const json& j);

struct ReportOptions {
  std::vector<NamedScore> scores;
  std::vector<DiagnosticKey> extra_keys;  // beyond the default performance keys
  std::optional<Millis> window;           // default: the instance's duration
};

ReportOptions report_options_from_json(const json& j);

/// Diagnostics compared at start and end: total service time of impacted
/// object types and of object types created by impacted transitions; sojourn,
/// waiting time and execution count of impacted transitions; plus extras.
std::set<DiagnosticKey> performance_keys(const Dtim& dtim, const std::set<ObjectType>& types,
                                         const std::set<TransitionId>& transitions, Millis window,
                                         const std::vector<DiagnosticKey>& extra = {});

struct ImpactReport {
  std::string instance;
  std::string action;
  Instant start{};
  Instant end{};
  InstanceStatus status = InstanceStatus::scheduled;
  EffectiveChange change;
  std::set<ObjectType> impacted_object_types;
  std::set<TransitionId> impacted_transitions;
  std::set<ObjectId> objects_of_impacted_types;
  std::set<ObjectId> objects_of_impacted_transitions;
  std::map<std::string, double> structural_scores;
  std::map<std::string, double> operational_scores;
  std::set<DiagnosticKey> performance_keys;
  std::map<DiagnosticKey, std::optional<double>> diagnostics_at_start;
  std::map<DiagnosticKey, std::optional<double>> diagnostics_at_end;
  // Empty until the instance completes; nullopt values are "not measurable".
  std::map<DiagnosticKey, std::optional<double>> performance_deltas;

  bool performance_available() const { return status == InstanceStatus::completed; }
};

/// Report for a scheduled-but-unstarted instance: empty sets, no scores.
ImpactReport pending_report(const ActionInstance& instance);

/// Structural and operational part, computed at the instance's start.
/// `at_start` must already carry diagnostics for the report's performance keys.
ImpactReport build_report(const Dtim& dtim, const ActionInstance& instance, const Configuration& before,
                          const Configuration& after, const EffectiveChange& change, const OperationalState& at_start,
                          const ReportOptions& options = {});

/// Adds the performance part once the instance has completed.
void complete_report(ImpactReport& report, const OperationalState& at_end);

json to_json(const ImpactReport& r, const StepClock* steps = nullptr);

// Table-style grid: one row per metric, one column per report.
struct GridRow {
  std::string impact;  // e.g. "Structural object impact"
  std::string label;
  // Exactly one source: a structural/operational score name or a diagnostic
  // (matched by kind and target; the window comes from the report).
  std::optional<std::string> score;
  std::optional<std::pair<DiagnosticKind, std::string>> diagnostic;
};

std::vector<GridRow> default_grid(const std::vector<ImpactReport>& reports);
std::vector<GridRow> grid_from_json(const json& j);

/// Cell text; "-" when the metric does not apply to the report, "n/a" when
/// it applies but is undefined, "pending" before completion.
std::string cell(const ImpactReport& r, const GridRow& row);
std::string render_grid(const std::vector<ImpactReport>& reports, const std::vector<GridRow>& rows);
json grid_to_json(const std::vector<ImpactReport>& reports, const std::vector<GridRow>& rows);

/// "-9m", "1.6h", "45s".
std::string format_duration(double seconds);

}  // namespace octwin::impact
