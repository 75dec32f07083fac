#pragma once

// Command-line front end. run_cli() is the whole program minus process
// plumbing, so tests drive it with in-memory streams.
//
// Exit codes: 0 success, 1 partial (some sweep runs or registry images
// failed), 2 usage or configuration error.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "lrsched/parallel.hpp"
#include "lrsched/registry.hpp"
#include "lrsched/report.hpp"
#include "lrsched/scenario.hpp"
#include "lrsched/simulator.hpp"

namespace lrsched {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitConfig = 2;

inline constexpr const char* kEnvRegistryUrl = "LRSCHED_REGISTRY_URL";
inline constexpr const char* kEnvOutputDir = "LRSCHED_OUTPUT_DIR";

/// Set from a signal handler to end fetch-registry watch mode.
inline std::atomic<bool> g_interrupted{false};

namespace cli_detail {

inline std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

struct Common {
  std::string scenario_path;
  std::string out;
  std::size_t jobs = 0;
  std::optional<std::uint64_t> seed;
};

inline ScenarioFile load(const Common& c, std::ostream& err) {
  ScenarioLoadOptions opts;
  opts.registry_url = env(kEnvRegistryUrl);
  auto f = load_scenario_file(c.scenario_path, opts);
  for (const auto& w : f.warnings) err << "warning: " << w << '\n';
  return f;
}

inline std::filesystem::path out_dir(const Common& c, const ScenarioFile& f) {
  if (!c.out.empty()) return c.out;
  if (auto e = env(kEnvOutputDir)) return *e;
  return f.output;
}

inline std::vector<std::uint64_t> seeds(const Common& c, const ScenarioFile& f) {
  if (c.seed) return {*c.seed};
  return f.seeds;
}

inline std::size_t jobs(const Common& c) { return c.jobs == 0 ? default_jobs() : c.jobs; }

inline std::string stem(const ScenarioFile& f) { return f.source.stem().string(); }

inline std::string what(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown error";
  }
}

/// One comparison per seed; runs execute on the pool. A seed with any failed
/// run yields no report and one failure line per failed run.
struct CompareOutcome {
  std::vector<ComparisonReport> reports;
  std::vector<std::string> failures;
};

inline CompareOutcome compare_seeds(const ScenarioFile& f, const std::vector<std::uint64_t>& seed_list, std::size_t n_jobs,
                                    const std::function<void(Scenario&)>& adjust = {}) {
  const std::size_t k = f.schedulers.size();
  std::vector<Scenario> scenarios;
  for (auto seed : seed_list) {
    for (const auto& entry : f.schedulers) {
      scenarios.push_back(f.scenario(entry, seed));
      if (adjust) adjust(scenarios.back());
    }
  }
  for (std::size_t i = 0; i < seed_list.size(); ++i) {
    check_comparable({scenarios.begin() + std::ptrdiff_t(i * k), scenarios.begin() + std::ptrdiff_t((i + 1) * k)});
  }
  std::vector<SimulationReport> runs(scenarios.size());
  auto errors = parallel_for(scenarios.size(), n_jobs, [&](std::size_t i) { runs[i] = run(scenarios[i]); });

  CompareOutcome out;
  for (std::size_t i = 0; i < seed_list.size(); ++i) {
    bool ok = true;
    for (std::size_t j = i * k; j < (i + 1) * k; ++j) {
      if (errors[j]) {
        ok = false;
        out.failures.push_back("seed " + std::to_string(seed_list[i]) + " scheduler " + f.schedulers[j - i * k].name +
                               ": " + what(errors[j]));
      }
    }
    if (ok) {
      out.reports.push_back(make_comparison(
          {std::make_move_iterator(runs.begin() + std::ptrdiff_t(i * k)),
           std::make_move_iterator(runs.begin() + std::ptrdiff_t((i + 1) * k))}));
    }
  }
  return out;
}

inline int cmd_validate(const Common& c, std::ostream& out, std::ostream& err) {
  auto f = load(c, err);
  for (const auto& entry : f.schedulers) {
    for (auto seed : f.seeds) f.scenario(entry, seed).initial_cluster();
  }
  out << "ok: " << f.source.string() << '\n'
      << "  nodes " << f.nodes.size() << ", images " << f.catalog.image_count() << ", layers " << f.catalog.layers().size()
      << ", schedulers " << f.schedulers.size() << ", seeds " << f.seeds.size() << '\n';
  return kExitOk;
}

inline int cmd_simulate(const Common& c, const std::string& scheduler, std::ostream& out, std::ostream& err) {
  auto f = load(c, err);
  const auto& entry = scheduler.empty() ? f.schedulers.front() : f.scheduler(scheduler);
  const std::uint64_t seed = c.seed.value_or(f.seeds.front());
  auto report = run(f.scenario(entry, seed));

  const auto dir = out_dir(c, f);
  const std::string base = "simulate-" + entry.name + "-seed" + std::to_string(seed);
  write_json(dir / (base + ".json"), to_json(report));
  write_text(dir / (base + ".csv"), steps_csv(report));

  out << stem(f) << ": " << entry.name << ", seed " << seed << ", " << report.steps.size() << " tasks ("
      << report.unschedulable << " unschedulable)\n";
  out << summary_table(ensemble({make_comparison({report})}));
  out << "wrote " << (dir / (base + ".json")).string() << '\n';
  return kExitOk;
}

inline int cmd_compare(const Common& c, std::ostream& out, std::ostream& err) {
  auto f = load(c, err);
  auto result = compare_seeds(f, seeds(c, f), jobs(c));
  for (const auto& msg : result.failures) err << "error: " << msg << '\n';
  if (!result.failures.empty()) return kExitConfig;

  const auto dir = out_dir(c, f);
  write_json(dir / "compare.json", comparison_json(stem(f), result.reports));
  write_text(dir / "compare.csv", comparison_csv(result.reports));
  write_text(dir / "compare_steps.csv", cumulative_csv(result.reports));

  out << stem(f) << ": " << result.reports.size() << " seed(s), reference " << result.reports.front().reference << '\n';
  out << summary_table(ensemble(result.reports));
  out << "wrote " << (dir / "compare.json").string() << '\n';
  return kExitOk;
}

inline int cmd_sweep(const Common& c, const std::string& param, std::ostream& out, std::ostream& err) {
  auto f = load(c, err);
  std::vector<SweepPoint> points;
  if (param == "bandwidth") {
    if (f.bandwidth_sweep.empty()) throw ScenarioError("sweeps.bandwidth", "no sweep points");
    for (double bw : f.bandwidth_sweep) points.push_back({"bandwidth", bw, {}, {}});
  } else {
    if (f.node_count_sweep.empty()) throw ScenarioError("sweeps.node_count", "no sweep points");
    for (auto n : f.node_count_sweep) points.push_back({"nodes", double(n), {}, {}});
  }

  bool partial = false;
  for (auto& p : points) {
    ScenarioFile variant = f;
    std::function<void(Scenario&)> adjust;
    if (p.param == "nodes") {
      variant.nodes = f.nodes_for_count(std::size_t(p.value));
    } else {
      const double bw = p.value;
      adjust = [bw](Scenario& s) { s.bandwidth_override = bw; };
    }
    auto result = compare_seeds(variant, seeds(c, f), jobs(c), adjust);
    p.reports = std::move(result.reports);
    p.failures = std::move(result.failures);
    for (const auto& msg : p.failures) err << "error: " << p.param << "=" << fmt_double(p.value) << ": " << msg << '\n';
    partial = partial || !p.failures.empty();
  }

  const auto dir = out_dir(c, f);
  write_json(dir / ("sweep-" + param + ".json"), sweep_json(stem(f), param, points));
  write_text(dir / ("sweep-" + param + ".csv"), sweep_csv(points));

  for (const auto& p : points) {
    out << param << " = " << (param == "bandwidth" ? fmt_double(p.value / 1e6) + " MB/s" : fmt_double(p.value)) << '\n';
    out << summary_table(ensemble(p.reports));
  }
  out << "wrote " << (dir / ("sweep-" + param + ".json")).string() << '\n';
  return partial ? kExitPartial : kExitOk;
}

struct FetchOptions {
  std::string registry;
  std::string out = "cache.json";
  std::optional<int> poll;
  std::size_t max_polls = 0;  // 0: until interrupted
  std::string username;
  std::string password;
  std::string token;
  int timeout = 5;
};

inline int cmd_fetch(FetchOptions o, std::ostream& out, std::ostream& err) {
  if (o.registry.empty()) o.registry = env(kEnvRegistryUrl).value_or("");
  if (o.registry.empty()) {
    err << "error: --registry is required (or set " << kEnvRegistryUrl << ")\n";
    return kExitConfig;
  }
  RegistryConfig cfg;
  cfg.base_url = o.registry;
  cfg.cache_path = o.out;
  cfg.timeout = std::chrono::seconds(o.timeout);
  if (o.poll) cfg.poll_interval = std::chrono::seconds(*o.poll);
  if (!o.username.empty() || !o.token.empty()) cfg.auth = RegistryAuth{o.token, o.username, o.password};
  cfg.validate();

  int code = kExitOk;
  for (std::size_t i = 0;; ++i) {
    auto result = refresh_cache(cfg);
    for (const auto& w : result.warnings) err << "warning: " << w << '\n';
    if (result.stale) {
      err << "warning: registry unreachable, kept existing " << cfg.cache_path.string() << '\n';
    } else if (!result.warnings.empty()) {
      code = kExitPartial;
    }
    out << (result.stale ? "stale " : "wrote ") << cfg.cache_path.string() << " (" << result.lists.lists.size()
        << " images)\n";

    if (!o.poll || (o.max_polls != 0 && i + 1 >= o.max_polls)) break;
    const auto until = std::chrono::steady_clock::now() + cfg.poll_interval;
    while (!g_interrupted && std::chrono::steady_clock::now() < until) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    if (g_interrupted) break;
  }
  return code;
}

}  // namespace cli_detail

/// Runs one command. `args` excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  using namespace cli_detail;
  CLI::App app{"Layer-aware container scheduling simulator"};
  app.name("lrsched");
  app.require_subcommand(1);

  Common common;
  std::string scheduler;
  std::string param;
  FetchOptions fetch;

  auto add_common = [&](CLI::App* sub, bool with_seed, bool with_jobs) {
    sub->add_option("scenario", common.scenario_path, "Scenario file (JSON)")->required();
    sub->add_option("--out", common.out, "Output directory (default: $" + std::string(kEnvOutputDir) + " or scenario 'output')");
    if (with_seed) sub->add_option("--seed", common.seed, "Run only this seed");
    if (with_jobs) sub->add_option("--jobs", common.jobs, "Parallel runs (default: logical CPUs)");
  };

  auto* fetch_cmd = app.add_subcommand("fetch-registry", "Fetch layer metadata from a Docker Registry v2 into cache.json");
  fetch_cmd->add_option("--registry", fetch.registry, "Registry base URL (default: $" + std::string(kEnvRegistryUrl) + ")");
  fetch_cmd->add_option("--out", fetch.out, "Cache file to write")->capture_default_str();
  fetch_cmd->add_option("--poll", fetch.poll, "Keep refreshing every N seconds")->expected(0, 1)->default_str("10");
  fetch_cmd->add_option("--max-polls", fetch.max_polls, "Stop watch mode after N refreshes");
  fetch_cmd->add_option("--username", fetch.username, "Basic auth user");
  fetch_cmd->add_option("--password", fetch.password, "Basic auth password");
  fetch_cmd->add_option("--token", fetch.token, "Bearer token");
  fetch_cmd->add_option("--timeout", fetch.timeout, "Request timeout in seconds")->capture_default_str();

  auto* sim_cmd = app.add_subcommand("simulate", "Run one scheduler on one seed");
  add_common(sim_cmd, true, false);
  sim_cmd->add_option("--scheduler", scheduler, "Scheduler name from the scenario (default: first)");

  auto* cmp_cmd = app.add_subcommand("compare", "Run every scheduler on every seed and compare");
  add_common(cmp_cmd, true, true);

  auto* sweep_cmd = app.add_subcommand("sweep", "Repeat compare over a bandwidth or node-count sweep");
  add_common(sweep_cmd, true, true);
  sweep_cmd->add_option("--param", param, "Swept parameter")->required()->check(CLI::IsMember({"bandwidth", "nodes"}));

  auto* val_cmd = app.add_subcommand("validate", "Check a scenario file");
  add_common(val_cmd, false, false);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (fetch_cmd->parsed()) return cmd_fetch(fetch, out, err);
    if (sim_cmd->parsed()) return cmd_simulate(common, scheduler, out, err);
    if (cmp_cmd->parsed()) return cmd_compare(common, out, err);
    if (sweep_cmd->parsed()) return cmd_sweep(common, param, out, err);
    if (val_cmd->parsed()) return cmd_validate(common, out, err);
  } catch (const ScenarioError& e) {
    err << "error: scenario " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace lrsched
