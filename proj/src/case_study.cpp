#include "octwin/case_study.hpp"

namespace octwin {

std::unique_ptr<TwinSession> case_study_twin(const sim::CaseStudy& cs, const std::string& id) {
  SessionOptions opts;
  opts.steps = cs.scenario.steps;
  opts.report_document = cs.report_options;
  opts.report = impact::report_options_from_json(cs.report_options);
  auto twin = std::make_unique<TwinSession>(id, cs.dtim, cs.configuration, opts);
  for (const auto& a : cs.actions) twin->define_action(a);
  for (const auto& ai : cs.instances) {
    auto r = twin->schedule(ai);
    if (!r.accepted) throw ActionError("case study instance " + ai.id + " rejected: " + r.reason);
  }
  return twin;
}

CaseStudyRun run_case_study(const sim::CaseStudy& cs, std::uint64_t seed) {
  CaseStudyRun out;
  Scheduler live(cs.dtim, cs.configuration);
  for (const auto& a : cs.actions) live.define(a);
  for (const auto& ai : cs.instances) live.schedule(ai);
  sim::ScheduledConfiguration source(live);
  auto scenario = cs.scenario;
  scenario.seed = seed;
  out.simulation = sim::run(scenario, cs.dtim, cs.horizon_steps, source);

  out.twin = case_study_twin(cs);
  out.twin->ingest(out.simulation.log);
  out.twin->flush();
  out.twin->advance_to(cs.scenario.steps.at(cs.horizon_steps));
  out.reports = out.twin->reports();
  out.grid = cs.metrics.empty() ? impact::default_grid(out.reports) : impact::grid_from_json(cs.metrics);
  return out;
}

json to_json(const CaseStudyRun& run, const sim::CaseStudy& cs) {
  json reports = json::array();
  for (const auto& r : run.reports) reports.push_back(impact::to_json(r, &cs.scenario.steps));
  return {{"events", run.simulation.log.events.size()},
          {"objects", run.simulation.log.objects.size()},
          {"deviations", run.twin->deviation_total()},
          {"markings_match", run.twin->state().marking == run.simulation.final_marking},
          {"reports", reports},
          {"grid", impact::grid_to_json(run.reports, run.grid)}};
}

}  // namespace octwin
