// secmon: run overlay monitoring scenarios and write their reports.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "secmon/canned_scenarios.hpp"
#include "secmon/report.hpp"
#include "secmon/scenario.hpp"
#include "secmon/simulator.hpp"

namespace fs = std::filesystem;
using namespace secmon;

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

struct Loaded {
  std::string label;
  ScenarioConfig cfg;
};

// A canned name wins over a file of the same name only when no such file exists.
ScenarioConfig load(const std::string& arg) {
  if (!fs::exists(arg)) {
    if (auto c = find_canned(arg)) return load_scenario_text(c->json);
    throw ConfigError("scenario", "'" + arg + "' is neither a readable file nor a canned scenario name");
  }
  return load_scenario_file(arg);
}

std::string one_line(const RunReport& r, const std::string& digest) {
  std::ostringstream o;
  o << r.scenario << ": sessions=" << r.sessions.size();
  for (const auto& s : r.sessions) o << " [s" << s.id << " delivered=" << detail::fmt(s.delivered_fraction()) << "]";
  o << " reroutes=" << r.reroutes.size() << " alarms=" << r.alarms.size() << " digest=" << digest;
  return o.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covert-channel security monitoring simulator"};
  std::vector<std::string> scenarios;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool list = false, validate_only = false;

  app.add_option("-s,--scenario", scenarios, "Scenario file or canned scenario name (repeatable)");
  app.add_option("-o,--out", out_dir, "Output directory for summary.json and CSV logs");
  app.add_option("--seed", seed, "Override the scenario seed");
  app.add_flag("--list", list, "List canned scenarios");
  app.add_flag("--validate-only", validate_only, "Validate scenarios without running them");

  if (argc <= 1) {
    std::cerr << app.help();
    return kUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  if (list) {
    for (const auto& c : canned_scenarios()) std::cout << c.name << "\t" << c.description << "\n";
    if (scenarios.empty()) return kOk;
  }
  if (scenarios.empty()) {
    std::cerr << "error: --scenario is required\n" << app.help();
    return kUsage;
  }

  std::vector<Loaded> jobs;
  try {
    for (const auto& s : scenarios) {
      auto cfg = load(s);
      if (seed) cfg.seed = *seed;
      validate(cfg);
      jobs.push_back({cfg.name.empty() ? fs::path(s).stem().string() : cfg.name, std::move(cfg)});
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  }

  if (validate_only) {
    for (const auto& j : jobs) std::cout << j.label << ": ok\n";
    return kOk;
  }
  if (out_dir.empty()) {
    std::cerr << "error: --out is required to run a scenario\n";
    return kUsage;
  }

  // Instances share nothing, so several scenarios run on their own threads.
  std::vector<std::future<RunReport>> futures;
  for (const auto& j : jobs) futures.push_back(std::async(std::launch::async, [&j] { return run(j.cfg); }));

  int rc = kOk;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    try {
      auto r = futures[i].get();
      const fs::path dir = jobs.size() == 1 ? fs::path(out_dir) : fs::path(out_dir) / jobs[i].label;
      write_report(r, dir);
      std::cout << one_line(r, report_digest(r)) << "\n";
    } catch (const std::exception& e) {
      std::cerr << jobs[i].label << ": " << e.what() << "\n";
      rc = kRuntime;
    }
  }
  return rc;
}
