#pragma once

// JSON and CSV serialization of simulation, comparison, and sweep results.
// Output is a pure function of the inputs: no timestamps, no host paths.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lrsched/errors.hpp"
#include "lrsched/simulator.hpp"

namespace lrsched {

inline constexpr const char* kStepsCsvHeader = "step,task,node,download_bytes,download_seconds,cluster_std";
inline constexpr const char* kUnschedulableNode = "unschedulable";

/// Shortest round-trip-stable text for CSV cells and tables.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_double(*v) : ""; }

inline nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

inline nlohmann::json to_json(const NodeUsage& u) {
  return {{"node", u.node_id}, {"cpu", u.cpu}, {"mem", u.mem}, {"disk", u.disk}, {"containers", u.containers}};
}

inline nlohmann::json to_json(const std::vector<NodeUsage>& usage) {
  auto out = nlohmann::json::array();
  for (const auto& u : usage) out.push_back(to_json(u));
  return out;
}

inline nlohmann::json to_json(const StepMetrics& s) {
  return {{"step", s.step},
          {"task", s.task_id},
          {"node", s.node_id ? nlohmann::json(*s.node_id) : nlohmann::json(nullptr)},
          {"download_bytes", s.download_bytes},
          {"download_seconds", s.download_seconds},
          {"cluster_std", s.cluster_std},
          {"usage", to_json(s.usage)}};
}

inline nlohmann::json to_json(const SimulationReport& r) {
  auto steps = nlohmann::json::array();
  for (const auto& s : r.steps) steps.push_back(to_json(s));
  return {{"fingerprint", r.fingerprint},
          {"scheduler", r.scheduler_name},
          {"policy", to_string(r.policy)},
          {"seed", r.seed},
          {"total_download_bytes", r.total_download_bytes},
          {"total_download_seconds", r.total_download_seconds},
          {"mean_cluster_std", r.mean_cluster_std},
          {"scheduled", r.scheduled},
          {"unschedulable", r.unschedulable},
          {"max_pods", {{"total", r.max_pods.total}, {"per_node", r.max_pods.per_node}}},
          {"final_usage", to_json(r.final_usage)},
          {"cumulative_download", r.cumulative_download},
          {"steps", steps}};
}

inline nlohmann::json to_json(const PolicySummary& s) {
  return {{"scheduler", s.scheduler_name},
          {"policy", to_string(s.policy)},
          {"total_download_bytes", s.total_download_bytes},
          {"total_download_seconds", s.total_download_seconds},
          {"mean_cluster_std", s.mean_cluster_std},
          {"max_pods", s.max_pods_total},
          {"mean_disk_usage", s.mean_disk_usage},
          {"unschedulable", s.unschedulable}};
}

inline nlohmann::json to_json(const PolicyDelta& d) {
  return {{"scheduler", d.scheduler_name},
          {"download_bytes_pct", opt_json(d.download_bytes_pct)},
          {"download_seconds_pct", opt_json(d.download_seconds_pct)},
          {"cluster_std_pct", opt_json(d.cluster_std_pct)},
          {"max_pods_pct", opt_json(d.max_pods_pct)},
          {"disk_usage_pct", opt_json(d.disk_usage_pct)}};
}

/// `with_runs` embeds the full per-run reports (steps included).
inline nlohmann::json to_json(const ComparisonReport& c, bool with_runs = false) {
  nlohmann::json out{{"seed", c.seed}, {"reference", c.reference}};
  auto& summaries = out["summaries"] = nlohmann::json::array();
  for (const auto& s : c.summaries) summaries.push_back(to_json(s));
  auto& deltas = out["deltas"] = nlohmann::json::array();
  for (const auto& d : c.deltas) deltas.push_back(to_json(d));
  if (with_runs) {
    auto& runs = out["runs"] = nlohmann::json::array();
    for (const auto& r : c.runs) runs.push_back(to_json(r));
  }
  return out;
}

inline std::string steps_csv(const SimulationReport& r) {
  std::ostringstream os;
  os << kStepsCsvHeader << '\n';
  for (const auto& s : r.steps) {
    os << s.step << ',' << s.task_id << ',' << s.node_id.value_or(kUnschedulableNode) << ',' << s.download_bytes << ','
       << fmt_double(s.download_seconds) << ',' << fmt_double(s.cluster_std) << '\n';
  }
  return os.str();
}

/// Mean of each summary metric across seeds, per scheduler, in first-seen order.
struct EnsembleSummary {
  std::string scheduler_name;
  std::size_t runs = 0;
  double mean_download_bytes = 0;
  double mean_download_seconds = 0;
  double mean_cluster_std = 0;
  double mean_max_pods = 0;
  double mean_disk_usage = 0;
  double mean_unschedulable = 0;
  std::optional<double> download_bytes_pct;  // vs. the reference's mean
};

inline std::vector<EnsembleSummary> ensemble(const std::vector<ComparisonReport>& reports) {
  std::vector<EnsembleSummary> out;
  std::string reference;
  for (const auto& c : reports) {
    if (reference.empty()) reference = c.reference;
    for (const auto& s : c.summaries) {
      auto it = std::find_if(out.begin(), out.end(), [&](const auto& e) { return e.scheduler_name == s.scheduler_name; });
      if (it == out.end()) {
        out.push_back({});
        it = out.end() - 1;
        it->scheduler_name = s.scheduler_name;
      }
      ++it->runs;
      it->mean_download_bytes += double(s.total_download_bytes);
      it->mean_download_seconds += s.total_download_seconds;
      it->mean_cluster_std += s.mean_cluster_std;
      it->mean_max_pods += double(s.max_pods_total);
      it->mean_disk_usage += s.mean_disk_usage;
      it->mean_unschedulable += double(s.unschedulable);
    }
  }
  for (auto& e : out) {
    const double n = double(e.runs);
    e.mean_download_bytes /= n;
    e.mean_download_seconds /= n;
    e.mean_cluster_std /= n;
    e.mean_max_pods /= n;
    e.mean_disk_usage /= n;
    e.mean_unschedulable /= n;
  }
  for (auto& e : out) {
    for (const auto& ref : out) {
      if (ref.scheduler_name == reference) e.download_bytes_pct = percent_change(e.mean_download_bytes, ref.mean_download_bytes);
    }
  }
  return out;
}

inline nlohmann::json to_json(const EnsembleSummary& e) {
  return {{"scheduler", e.scheduler_name},
          {"runs", e.runs},
          {"mean_download_bytes", e.mean_download_bytes},
          {"mean_download_seconds", e.mean_download_seconds},
          {"mean_cluster_std", e.mean_cluster_std},
          {"mean_max_pods", e.mean_max_pods},
          {"mean_disk_usage", e.mean_disk_usage},
          {"mean_unschedulable", e.mean_unschedulable},
          {"download_bytes_pct", opt_json(e.download_bytes_pct)}};
}

inline nlohmann::json comparison_json(const std::string& scenario_name, const std::vector<ComparisonReport>& reports) {
  nlohmann::json out{{"scenario", scenario_name}};
  auto& mean = out["mean"] = nlohmann::json::array();
  for (const auto& e : ensemble(reports)) mean.push_back(to_json(e));
  auto& per_seed = out["per_seed"] = nlohmann::json::array();
  for (const auto& c : reports) per_seed.push_back(to_json(c));
  return out;
}

inline constexpr const char* kComparisonCsvHeader =
    "seed,scheduler,policy,total_download_bytes,total_download_seconds,mean_cluster_std,max_pods,mean_disk_usage,"
    "unschedulable,download_bytes_pct,download_seconds_pct,cluster_std_pct,max_pods_pct,disk_usage_pct";

inline void comparison_rows(std::ostream& os, const ComparisonReport& c, const std::string& prefix = "") {
  for (std::size_t i = 0; i < c.summaries.size(); ++i) {
    const auto& s = c.summaries[i];
    const auto& d = c.deltas[i];
    os << prefix << c.seed << ',' << s.scheduler_name << ',' << to_string(s.policy) << ',' << s.total_download_bytes << ','
       << fmt_double(s.total_download_seconds) << ',' << fmt_double(s.mean_cluster_std) << ',' << s.max_pods_total << ','
       << fmt_double(s.mean_disk_usage) << ',' << s.unschedulable << ',' << fmt_opt(d.download_bytes_pct) << ','
       << fmt_opt(d.download_seconds_pct) << ',' << fmt_opt(d.cluster_std_pct) << ',' << fmt_opt(d.max_pods_pct) << ','
       << fmt_opt(d.disk_usage_pct) << '\n';
  }
}

inline std::string comparison_csv(const std::vector<ComparisonReport>& reports) {
  std::ostringstream os;
  os << kComparisonCsvHeader << '\n';
  for (const auto& c : reports) comparison_rows(os, c);
  return os.str();
}

/// Long-format cumulative download curve, one row per (seed, scheduler, step).
inline std::string cumulative_csv(const std::vector<ComparisonReport>& reports) {
  std::ostringstream os;
  os << "seed,scheduler,step,cumulative_download_bytes\n";
  for (const auto& c : reports) {
    for (const auto& r : c.runs) {
      for (std::size_t i = 0; i < r.cumulative_download.size(); ++i) {
        os << c.seed << ',' << r.scheduler_name << ',' << (i + 1) << ',' << r.cumulative_download[i] << '\n';
      }
    }
  }
  return os.str();
}

struct SweepPoint {
  std::string param;  // "bandwidth" or "nodes"
  double value = 0;
  std::vector<ComparisonReport> reports;  // one per seed
  std::vector<std::string> failures;
};

inline nlohmann::json sweep_json(const std::string& scenario_name, const std::string& param,
                                 const std::vector<SweepPoint>& points) {
  nlohmann::json out{{"scenario", scenario_name}, {"param", param}};
  auto& arr = out["points"] = nlohmann::json::array();
  for (const auto& p : points) {
    nlohmann::json j{{"value", p.value}, {"failures", p.failures}};
    auto& mean = j["mean"] = nlohmann::json::array();
    for (const auto& e : ensemble(p.reports)) mean.push_back(to_json(e));
    auto& per_seed = j["per_seed"] = nlohmann::json::array();
    for (const auto& c : p.reports) per_seed.push_back(to_json(c));
    arr.push_back(std::move(j));
  }
  return out;
}

inline std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::ostringstream os;
  os << "param,value," << kComparisonCsvHeader << '\n';
  for (const auto& p : points) {
    for (const auto& c : p.reports) comparison_rows(os, c, p.param + "," + fmt_double(p.value) + ",");
  }
  return os.str();
}

/// Fixed-width table for stdout.
inline std::string summary_table(const std::vector<EnsembleSummary>& rows) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %5s %14s %12s %10s %9s %8s %9s\n", "scheduler", "runs", "download_MB",
                "download_s", "vs_ref_%", "std", "max_pods", "disk_%");
  os << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-16s %5zu %14.1f %12.1f %10s %9.4f %8.1f %9.2f\n", r.scheduler_name.c_str(), r.runs,
                  r.mean_download_bytes / 1e6, r.mean_download_seconds,
                  r.download_bytes_pct ? fmt_double(std::round(*r.download_bytes_pct * 10) / 10).c_str() : "-",
                  r.mean_cluster_std, r.mean_max_pods, r.mean_disk_usage * 100);
    os << line;
  }
  return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("cannot write " + path.string());
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace lrsched
