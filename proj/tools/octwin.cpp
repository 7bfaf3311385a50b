// octwin command line: model validation, log replay, impact analysis,
// the HTTP service and the P2P simulator.
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "octwin/bundled.hpp"
#include "octwin/case_study.hpp"
#include "octwin/service.hpp"
#include "octwin/sim.hpp"
#include "octwin/twin.hpp"

using namespace octwin;

namespace {

enum Exit { ok = 0, usage = 1, invalid = 2, runtime = 3 };

struct ValidationFailure : std::runtime_error {
  json details;
  ValidationFailure(const std::string& what, json d = nullptr) : std::runtime_error(what), details(std::move(d)) {}
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationFailure(path + ": " + e.what());
  }
}

json issues_json(const std::vector<Issue>& issues) {
  json out = json::array();
  for (const auto& i : issues) out.push_back({{"severity", i.is_error() ? "error" : "warning"}, {"message", i.message}});
  return out;
}

struct Model {
  json document;
  std::shared_ptr<const Dtim> dtim;
  Configuration configuration;
  std::vector<Issue> issues;
};

// Accepts a path or "bundled:<name>".
Model load_model(const std::string& ref) {
  Model m;
  try {
    m.document = sim::load_dtim_document(ref);
  } catch (const json::parse_error& e) {
    throw ValidationFailure(ref + ": " + e.what());
  } catch (const std::out_of_range&) {
    throw ValidationFailure("no bundled document " + ref);
  }
  try {
    m.dtim = std::make_shared<const Dtim>(dtim_from_json(m.document));
  } catch (const FormatError& e) {
    throw ValidationFailure(e.what());
  } catch (const StructuralError& e) {
    throw ValidationFailure(e.what());
  }
  m.issues = validate(*m.dtim);
  if (auto c = default_configuration(m.document)) {
    m.configuration = *c;
    auto more = validate(*m.dtim, *c);
    m.issues.insert(m.issues.end(), more.begin(), more.end());
  }
  return m;
}

void require_valid(const Model& m) {
  if (error_count(m.issues)) throw ValidationFailure("the model does not validate", issues_json(m.issues));
}

ocel::Log load_log(const std::string& path, const Dtim& dtim) {
  try {
    return ocel::ingest(read_json(path), &dtim);
  } catch (const ocel::ParseError& e) {
    throw ValidationFailure(path + ": " + e.what(), {{"path", e.path}});
  } catch (const ocel::IngestionError& e) {
    throw ValidationFailure(path + ": " + e.what(), {{"ids", e.ids}});
  }
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(1) << '\n';
}

// ---- validate

int cmd_validate(const std::string& ref, bool as_json) {
  auto m = load_model(ref);
  const auto errors = error_count(m.issues);
  if (as_json) {
    print({{"valid", errors == 0}, {"issues", issues_json(m.issues)}});
  } else {
    for (const auto& i : m.issues) std::cout << (i.is_error() ? "error: " : "warning: ") << i.message << '\n';
    if (!errors) std::cout << "ok: " << m.dtim->net().places().size() << " places, "
                           << m.dtim->net().transitions().size() << " transitions\n";
  }
  return errors ? invalid : ok;
}

// ---- replay

int cmd_replay(const std::string& model_ref, const std::string& log_path, bool report, bool as_json) {
  auto m = load_model(model_ref);
  require_valid(m);
  auto log = load_log(log_path, *m.dtim);
  TwinSession twin("replay", m.dtim, m.configuration);
  auto s = twin.ingest(log);
  s.merge(twin.flush());
  json out = to_json(s);
  if (report) out["state"] = twin.state_json();
  if (as_json) {
    print(out);
    return ok;
  }
  std::cout << "events: " << s.applied << " applied, " << s.duplicates << " duplicates, " << s.rejected.size()
            << " rejected\n";
  std::cout << "deviations: " << s.deviations.size() << '\n';
  if (report) {
    for (const auto& d : s.deviations) std::cout << "  " << to_json(d).dump() << '\n';
    const auto st = twin.state_json();
    std::cout << "open objects: " << st.at("objects").size() << '\n';
    for (const auto& d : st.at("diagnostics")) std::cout << "  " << d.at("key").dump() << " = " << d.at("value") << '\n';
  }
  return ok;
}

// ---- impact

int cmd_impact(const std::string& model_ref, const std::string& log_path, const std::string& instances_path,
               bool as_json) {
  auto m = load_model(model_ref);
  require_valid(m);
  const json bundle = read_json(instances_path);
  SessionOptions opts = session_options_from_json(bundle.value("options", json::object()));
  TwinSession twin("impact", m.dtim, m.configuration, opts);
  try {
    for (const auto& a : bundle.value("actions", json::array())) twin.define_action(action_from_json(a));
    for (const auto& ai : bundle.value("instances", json::array())) {
      auto r = twin.schedule(action_instance_from_json(ai, opts.steps));
      if (!r) throw ValidationFailure("instance rejected: " + r.reason, {{"conflicts", r.conflicts}});
    }
  } catch (const ActionError& e) {
    throw ValidationFailure(e.what());
  } catch (const json::exception& e) {
    throw ValidationFailure(instances_path + ": " + e.what());
  }
  auto log = load_log(log_path, *m.dtim);
  twin.ingest(log);
  twin.flush();
  // Close every instance even when the log ends earlier.
  for (const auto& ai : twin.scheduler().instances())
    if (!twin.clock() || *twin.clock() < ai.end) twin.advance_to(ai.end);

  const auto reports = twin.reports();
  const json metrics = bundle.value("metrics", json::array());
  const auto rows = metrics.empty() ? impact::default_grid(reports) : impact::grid_from_json(metrics);
  if (as_json) {
    json rj = json::array();
    for (const auto& r : reports) rj.push_back(impact::to_json(r, &opts.steps));
    print({{"reports", rj}, {"grid", impact::grid_to_json(reports, rows)}});
  } else {
    std::cout << impact::render_grid(reports, rows);
  }
  return ok;
}

// ---- serve

std::atomic<bool> g_stop{false};

int cmd_serve(std::optional<int> port, const std::string& host) {
  int p = 8080;
  if (port) p = *port;
  else if (const char* env = std::getenv("OCTWIN_PORT")) p = std::atoi(env);
  std::optional<std::string> snapshots;
  if (const char* env = std::getenv("OCTWIN_SNAPSHOT_DIR"); env && *env) snapshots = env;

  service::Api api(snapshots);
  if (snapshots) std::cerr << "restored " << api.load_snapshots() << " twins from " << *snapshots << '\n';
  service::HttpServer server(api);
  const int bound = server.start(host, p);
  if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(p));
  std::cerr << "listening on " << host << ":" << bound << '\n';

  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  if (snapshots) std::cerr << "saved " << api.save_snapshots() << " twins to " << *snapshots << '\n';
  return ok;
}

// ---- sim

int cmd_sim_run(const std::string& scenario_path, long long horizon, std::optional<std::uint64_t> seed,
                const std::string& out, const std::string& settings_out, bool as_json) {
  sim::Scenario sc;
  std::string base_dir = ".";
  try {
    if (scenario_path.empty()) {
      sc = sim::scenario_from_json(json::parse(bundled_document("p2p_scenario")));
    } else {
      sc = sim::scenario_from_json(read_json(scenario_path));
      base_dir = std::filesystem::path(scenario_path).parent_path().string();
      if (base_dir.empty()) base_dir = ".";
    }
  } catch (const json::exception& e) {
    throw ValidationFailure(std::string("scenario: ") + e.what());
  } catch (const sim::ScenarioError& e) {
    throw ValidationFailure(e.what());
  }
  if (seed) sc.seed = *seed;
  auto m = load_model(sc.dtim.rfind("bundled:", 0) == 0 ? sc.dtim : (std::filesystem::path(base_dir) / sc.dtim).string());
  require_valid(m);
  sim::FixedConfiguration conf(m.configuration);
  sim::RunResult r;
  try {
    r = sim::run(sc, m.dtim, horizon, conf);
  } catch (const sim::ScenarioError& e) {
    throw ValidationFailure(e.what());
  }
  const json log = ocel::to_json(r.log);
  if (!out.empty()) write_json(out, log);
  if (!settings_out.empty()) write_json(settings_out, history_to_json(r.timeline, &sc.steps));
  json summary = {{"events", r.log.events.size()},
                  {"objects", r.log.objects.size()},
                  {"seed", sc.seed},
                  {"horizon", horizon},
                  {"requeued_batches", r.requeued_batches}};
  if (as_json) print(out.empty() ? json{{"summary", summary}, {"log", log}} : summary);
  else if (out.empty()) std::cout << log.dump(1) << '\n';
  else std::cout << summary.at("events") << " events, " << summary.at("objects") << " objects written to " << out << '\n';
  return ok;
}

int cmd_case_study(std::optional<std::uint64_t> seed, const std::string& out, bool as_json) {
  auto cs = sim::load_case_study();
  const auto run = run_case_study(cs, seed.value_or(cs.scenario.seed));
  if (!out.empty()) write_json(out, ocel::to_json(run.simulation.log));
  if (as_json) {
    print(to_json(run, cs));
    return ok;
  }
  std::cout << "seed " << seed.value_or(cs.scenario.seed) << ": " << run.simulation.log.events.size() << " events, "
            << run.simulation.log.objects.size() << " objects, " << run.twin->deviation_total() << " deviations\n\n";
  std::cout << impact::render_grid(run.reports, run.grid);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Object-centric digital twin toolkit"};
  app.require_subcommand(1);
  bool as_json = false;
  app.add_flag("--json", as_json, "machine-readable output");

  std::string model, log_path, instances;
  bool report = false;

  auto* validate_cmd = app.add_subcommand("validate", "check a DT-IM document");
  validate_cmd->add_option("dtim", model, "DT-IM JSON file or bundled:<name>")->required();
  validate_cmd->add_flag("--json", as_json);

  auto* replay_cmd = app.add_subcommand("replay", "replay an OCEL log on a DT-IM");
  replay_cmd->add_option("dtim", model)->required();
  replay_cmd->add_option("log", log_path, "OCEL JSON log")->required();
  replay_cmd->add_flag("--report", report, "list deviations and diagnostics");
  replay_cmd->add_flag("--json", as_json);

  auto* impact_cmd = app.add_subcommand("impact", "impact reports for action instances over a log");
  impact_cmd->add_option("dtim", model)->required();
  impact_cmd->add_option("log", log_path)->required();
  impact_cmd->add_option("instances", instances, "JSON with actions, instances and optional metrics")->required();
  impact_cmd->add_flag("--json", as_json);

  std::optional<int> port;
  std::string host = "0.0.0.0";
  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
  serve_cmd->add_option("--port", port, "defaults to OCTWIN_PORT or 8080");
  serve_cmd->add_option("--host", host);

  auto* sim_cmd = app.add_subcommand("sim", "P2P process simulator");
  sim_cmd->require_subcommand(1);
  std::string scenario, out, settings_out;
  long long horizon = 20;
  std::optional<std::uint64_t> seed;
  auto* run_cmd = sim_cmd->add_subcommand("run", "simulate under the initial configuration");
  run_cmd->add_option("--scenario", scenario, "scenario JSON (default: bundled)");
  run_cmd->add_option("--horizon", horizon, "steps");
  run_cmd->add_option("--seed", seed);
  run_cmd->add_option("--out", out, "OCEL output file");
  run_cmd->add_option("--settings-out", settings_out, "configuration timeline output file");
  run_cmd->add_flag("--json", as_json);
  auto* cs_cmd = sim_cmd->add_subcommand("case-study", "closed-loop run of the bundled case study");
  cs_cmd->add_option("--seed", seed);
  cs_cmd->add_option("--out", out, "write the emitted OCEL log");
  cs_cmd->add_flag("--json", as_json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? ok : usage;
  }

  try {
    if (*validate_cmd) return cmd_validate(model, as_json);
    if (*replay_cmd) return cmd_replay(model, log_path, report, as_json);
    if (*impact_cmd) return cmd_impact(model, log_path, instances, as_json);
    if (*serve_cmd) return cmd_serve(port, host);
    if (*run_cmd) return cmd_sim_run(scenario, horizon, seed, out, settings_out, as_json);
    if (*cs_cmd) return cmd_case_study(seed, out, as_json);
  } catch (const ValidationFailure& e) {
    if (as_json) print({{"error", e.what()}, {"details", e.details}});
    else std::cerr << "invalid: " << e.what() << (e.details.is_null() ? "" : "\n" + e.details.dump(2)) << '\n';
    return invalid;
  } catch (const std::exception& e) {
    if (as_json) print({{"error", e.what()}});
    else std::cerr << "error: " << e.what() << '\n';
    return runtime;
  }
  return usage;
}
