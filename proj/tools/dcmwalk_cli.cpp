// Command line front end: single runs, velocity sweeps and the four-way
// architecture comparison.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dcmwalk/footsteps.hpp"
#include "dcmwalk/sim.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace dcmwalk;

namespace {

// exit codes, one per error category
enum Exit : int { kOk = 0, kUsage = 2, kConfig = 3, kPlanning = 4, kIo = 5, kRuntime = 6 };

struct CliError {
  Exit code;
  std::string category;
  std::string message;
};

[[noreturn]] void fail(Exit code, const std::string& category, const std::string& message) {
  throw CliError{code, category, message};
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json toJson(const Metrics& m) {
  return {{"max_dcm_error", m.max_dcm_error},
          {"mean_dcm_error", m.mean_dcm_error},
          {"max_com_error", m.max_com_error},
          {"mean_com_error", m.mean_com_error},
          {"max_foot_error", {m.max_foot_error.x(), m.max_foot_error.y(), m.max_foot_error.z()}},
          {"max_swing_foot_error", m.max_swing_foot_error},
          {"max_hard_residual", m.max_hard_residual},
          {"max_joint_bound_violation", m.max_joint_bound_violation},
          {"fallback_cycles", m.fallback_cycles},
          {"mean_forward_velocity", m.mean_forward_velocity},
          {"cycles", m.cycles}};
}

json toJson(const Scenario& s) {
  json j = json::object();
  for (const auto& [k, v] : scenarioValues(s)) j[k] = v;
  return j;
}

json toJson(const RunResult& r) {
  return {{"seed", r.scenario.seed},
          {"controller", toString(r.scenario.controller)},
          {"mode", toString(r.scenario.mode)},
          {"commanded_velocity", r.scenario.unicycle.forward_velocity},
          {"success", r.success()},
          {"fell", r.fell},
          {"fall_time", r.fell ? json(r.fall_time) : json(nullptr)},
          {"failed", r.failed},
          {"failure", r.failure},
          {"steps_planned", r.steps_planned},
          {"steps_completed", r.steps_completed},
          {"cycle_ms", {{"mean", r.mean_cycle_ms}, {"max", r.max_cycle_ms}}},
          {"metrics", toJson(r.metrics)}};
}

std::ofstream openOut(const fs::path& dir, const std::string& name) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(kIo, "io", "cannot create " + dir.string() + ": " + ec.message());
  std::ofstream f(dir / name);
  if (!f) fail(kIo, "io", "cannot write " + (dir / name).string());
  f.precision(17);
  return f;
}

Scenario load(const std::string& path, const std::vector<std::string>& overrides) {
  Scenario s = path.empty() ? Scenario{} : loadScenario(path);
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    setScenarioValue(s, kv.substr(0, eq), kv.substr(eq + 1));
  }
  s.validate();
  return s;
}

std::vector<double> parseList(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    while (end && *end == ' ') ++end;
    if (item.empty() || !end || *end != '\0' || !std::isfinite(v))
      throw ConfigError("velocities: cannot read '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("velocities: empty list");
  return out;
}

RunResult runOrThrow(const Scenario& s) {
  try {
    return runScenario(s);
  } catch (const PlanningError& e) {
    fail(kPlanning, "planning", std::string(e.what()) + " (bound: " + e.bound() + ")");
  }
}

int cmdRun(const std::string& config, const std::vector<std::string>& sets, const std::uint64_t* seed,
           const fs::path& out) {
  Scenario s = load(config, sets);
  if (seed) s.seed = *seed;
  const RunResult r = runOrThrow(s);
  {
    std::ofstream f = openOut(out, "trace.csv");
    writeTraceCsv(f, r.trace);
  }
  json summary = toJson(r);
  summary["scenario"] = toJson(s);
  openOut(out, "summary.json") << summary.dump(2) << '\n';
  std::cout << s.name << ": " << (r.success() ? "completed" : r.fell ? "fell" : "controller error") << ", "
            << r.steps_completed << "/" << r.steps_planned << " steps, max DCM error " << r.metrics.max_dcm_error
            << " m, mean cycle " << r.mean_cycle_ms << " ms\n";
  if (r.failed) fail(kRuntime, "runtime", r.failure);
  return kOk;
}

int cmdSweep(const std::string& config, const std::vector<std::string>& sets, const std::string& velocities,
             const fs::path& out) {
  const Scenario base = load(config, sets);
  const std::vector<double> vs = parseList(velocities);
  json runs = json::array();
  std::ofstream csv = openOut(out, "sweep.csv");
  csv << "velocity,success,fell,fall_time,max_dcm_error,max_com_error,max_swing_foot_error,mean_forward_velocity,"
         "mean_cycle_ms\n";
  for (double v : vs) {
    Scenario s = base;
    s.unicycle.forward_velocity = v;
    json entry;
    try {
      s.validate();
      const RunResult r = runScenario(s);
      entry = toJson(r);
      csv << v << ',' << r.success() << ',' << r.fell << ',' << r.fall_time << ',' << r.metrics.max_dcm_error << ','
          << r.metrics.max_com_error << ',' << r.metrics.max_swing_foot_error << ','
          << r.metrics.mean_forward_velocity << ',' << r.mean_cycle_ms << '\n';
    } catch (const PlanningError& e) {
      // a speed the planner cannot realize counts as a failed point
      entry = {{"commanded_velocity", v}, {"success", false}, {"planning_error", e.what()}};
      csv << v << ",0,0,-1,,,,,\n";
    }
    std::cout << "v = " << v << ": " << (entry["success"].get<bool>() ? "ok" : "failed") << '\n';
    runs.push_back(entry);
  }
  json summary = {{"scenario", toJson(base)}, {"runs", runs}};
  openOut(out, "summary.json") << summary.dump(2) << '\n';
  return kOk;
}

int cmdCompare(const std::string& config, const std::vector<std::string>& sets, const std::string& velocities,
               unsigned threads, const fs::path& out) {
  const Scenario base = load(config, sets);
  const std::vector<double> vs = velocities.empty() ? base.compare_velocities : parseList(velocities);
  const std::vector<ComparisonRow> rows = compareArchitectures(base, vs, threads);
  {
    std::ofstream f = openOut(out, "comparison.csv");
    writeComparisonCsv(f, rows);
  }
  json table = json::array();
  for (const ComparisonRow& r : rows) {
    json runs = json::array();
    for (const auto& [v, ok] : r.runs) runs.push_back({{"velocity", v}, {"success", ok}});
    table.push_back({{"controller", toString(r.controller)},
                     {"mode", toString(r.mode)},
                     {"max_velocity", nullable(r.max_velocity)},
                     {"runs", runs}});
    std::cout << toString(r.controller) << " + " << toString(r.mode) << ": " << r.max_velocity << " m/s\n";
  }
  json summary = {{"scenario", toJson(base)}, {"velocities", vs}, {"architectures", table}};
  openOut(out, "summary.json") << summary.dump(2) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Walking controller simulation"};
  app.require_subcommand(1);

  std::string config, velocities;
  std::vector<std::string> sets;
  std::string out = "out";
  std::uint64_t seed = 0;
  unsigned threads = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "key = value scenario file")->check(CLI::ExistingFile);
    sub->add_option("--set", sets, "override one key, key=value (repeatable)");
    sub->add_option("--out", out, "output directory")->capture_default_str();
  };
  CLI::App* run = app.add_subcommand("run", "simulate one scenario");
  common(run);
  CLI::Option* seed_opt = run->add_option("--seed", seed, "noise seed (overrides the config)");
  CLI::App* sweep = app.add_subcommand("sweep", "simulate a list of forward velocities");
  common(sweep);
  sweep->add_option("--velocities", velocities, "comma separated, m/s")->required();
  CLI::App* compare = app.add_subcommand("compare", "max no-fall velocity of each controller and mode pair");
  common(compare);
  compare->add_option("--velocities", velocities, "comma separated, m/s (default: compare_velocities)");
  compare->add_option("--threads", threads, "worker threads, 0 = all cores");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << json{{"error", "usage"}, {"message", e.what()}}.dump() << '\n';
    return kUsage;
  }

  try {
    if (*run) return cmdRun(config, sets, seed_opt->count() ? &seed : nullptr, out);
    if (*sweep) return cmdSweep(config, sets, velocities, out);
    return cmdCompare(config, sets, velocities, threads, out);
  } catch (const CliError& e) {
    std::cerr << json{{"error", e.category}, {"message", e.message}}.dump() << '\n';
    return e.code;
  } catch (const ConfigError& e) {
    std::cerr << json{{"error", "config"}, {"message", e.what()}}.dump() << '\n';
    return kConfig;
  } catch (const PlanningError& e) {
    std::cerr << json{{"error", "planning"}, {"message", e.what()}}.dump() << '\n';
    return kPlanning;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "runtime"}, {"message", e.what()}}.dump() << '\n';
    return kRuntime;
  }
}
