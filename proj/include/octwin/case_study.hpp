#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "octwin/sim.hpp"
#include "octwin/twin.hpp"

namespace octwin {

struct CaseStudyRun {
  sim::RunResult simulation;
  std::unique_ptr<TwinSession> twin;  // the log replayed with the same actions
  std::vector<impact::ImpactReport> reports;
  std::vector<impact::GridRow> grid;
};

/// Simulates the case study with its action instances driving the simulated
/// system, then replays the emitted log through a fresh twin carrying the
/// same instances.
CaseStudyRun run_case_study(const sim::CaseStudy& cs, std::uint64_t seed);

/// A twin loaded with the case study's actions and instances, no events.
std::unique_ptr<TwinSession> case_study_twin(const sim::CaseStudy& cs, const std::string& id = "p2p");

json to_json(const CaseStudyRun& run, const sim::CaseStudy& cs);

}  // namespace octwin
