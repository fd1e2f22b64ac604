// pcaplab: run experiment configs and list the builtin models.
//
// Exit status: 0 all checks pass (or are not guaranteed), 1 some check
// fails, 2 a solver raised an error, 64 bad usage or malformed config.

#include "pcap/config.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitSolver = 2;
constexpr int kExitUsage = 64;

struct JobResult {
  std::optional<pcap::Report> report;
  std::string error;
};

std::vector<JobResult> run_jobs(const std::vector<pcap::ExperimentSpec>& specs, int jobs) {
  std::vector<JobResult> results(specs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      try {
        results[i].report = pcap::run_experiment(specs[i]);
      } catch (const std::exception& e) {
        results[i].error = e.what();
      }
    }
  };
  const int k = std::clamp<int>(jobs, 1, static_cast<int>(specs.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < k; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return results;
}

void write_report(const pcap::Report& rep, const fs::path& dir, int seed) {
  fs::create_directories(dir);
  for (const auto& t : rep.tables) {
    std::ofstream out(dir / (t.name + ".csv"), std::ios::binary);
    t.write_csv(out);
  }
  json j = rep.to_json();
  j["environment"]["seed"] = seed;
  std::ofstream(dir / "report.json", std::ios::binary) << j.dump(2) << '\n';
}

int cmd_run(const std::string& path, const std::string& out_flag, int jobs, int seed) {
  pcap::Config cfg;
  try {
    cfg = pcap::load_config(path);
  } catch (const pcap::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  const fs::path out = !out_flag.empty() ? fs::path(out_flag)
                       : !cfg.output.empty() ? fs::path(cfg.output)
                                             : fs::path("pcaplab_out");
  auto results = run_jobs(cfg.experiments, jobs);

  // single writer, experiment order
  int status = 0;
  std::ostringstream summary;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& name = cfg.experiments[i].name;
    if (!results[i].report) {
      summary << name << ": solver error: " << results[i].error << '\n';
      status = kExitSolver;
      continue;
    }
    const auto& rep = *results[i].report;
    try {
      write_report(rep, out / name, seed);
    } catch (const std::exception& e) {
      std::cerr << "error: cannot write " << (out / name).string() << ": " << e.what() << '\n';
      return kExitUsage;
    }
    if (cfg.verbosity > 0) rep.write_summary(summary);
    else {
      std::size_t fails = 0;
      for (const auto& c : rep.checks) fails += c.verdict == pcap::Verdict::fail;
      summary << name << ": " << rep.checks.size() << " checks, " << fails << " failed\n";
    }
    if (rep.any_fail() && status == 0) status = kExitFail;
  }
  std::error_code ec;
  fs::create_directories(out, ec);
  std::ofstream(out / "summary.txt", std::ios::binary) << summary.str();
  std::cout << summary.str();
  return status;
}

int cmd_list(bool as_json, bool verbose) {
  const auto models = pcap::list_models();
  if (as_json) {
    json arr = json::array();
    for (const auto& m : models) {
      json row{{"id", m.id}, {"parameters", m.parameters}};
      if (verbose) {
        row["r_min"] = m.r_min ? json(*m.r_min) : json(nullptr);
        row["avr"] = m.avr ? json(*m.avr) : json(nullptr);
      }
      arr.push_back(row);
    }
    std::cout << arr.dump(2) << '\n';
    return 0;
  }
  std::cout << std::left << std::setw(15) << "id" << std::setw(26) << "parameters";
  if (verbose) std::cout << std::setw(8) << "r_min" << "avr";
  std::cout << '\n';
  for (const auto& m : models) {
    std::cout << std::setw(15) << m.id << std::setw(26) << m.parameters;
    if (verbose) {
      std::cout << std::setw(8) << (m.r_min ? (std::ostringstream() << *m.r_min).str() : "-");
      if (m.avr) std::cout << *m.avr;
      else std::cout << "-";
    }
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"p-capacitary potentials and monotone level-set functionals"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string out;
  int jobs = 1;
  int seed = 0;
  app.add_option("--out", out, "output directory (overrides the config)");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "reserved; the suites are deterministic");

  auto* run = app.add_subcommand("run", "run an experiment config");
  std::string config;
  run->add_option("config", config, "JSON config")->required();

  auto* list = app.add_subcommand("list-models", "list the builtin models");
  bool as_json = false, verbose = false;
  list->add_flag("--json", as_json, "JSON array");
  list->add_flag("--verbose", verbose, "include r_min and AVR");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  if (*run) return cmd_run(config, out, jobs, seed);
  return cmd_list(as_json, verbose);
}
