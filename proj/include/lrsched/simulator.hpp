#pragma once

// Sequential replay of a task trace against a modelled cluster, recording
// per-step download and balance metrics.

#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lrsched/model.hpp"
#include "lrsched/scheduler.hpp"
#include "lrsched/scoring.hpp"
#include "lrsched/workload.hpp"

namespace lrsched {

struct NodeSetup {
  NodeSpec spec;
  std::vector<ImageRef> preloaded_images;
  std::vector<LayerId> preloaded_layers;
};

struct Scenario {
  std::vector<NodeSetup> nodes;
  LayerCatalog catalog;
  WorkloadSpec workload;
  std::vector<TaskRequest> trace;  // used when workload.kind == trace_file
  std::string scheduler_name = "lr_dynamic";
  SchedulerConfig scheduler;
  std::uint64_t seed = 0;
  std::optional<double> bandwidth_override;  // bytes/s applied to every node

  void validate() const {
    if (nodes.empty()) throw ScenarioError("nodes", "at least one node is required");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const std::string field = "nodes[" + std::to_string(i) + "]";
      try {
        nodes[i].spec.validate();
      } catch (const InvalidModel& e) {
        throw ScenarioError(field, e.what());
      }
      if (!ids.insert(nodes[i].spec.id).second) throw ScenarioError(field + ".id", "duplicate node id");
      for (const auto& img : nodes[i].preloaded_images) {
        if (!catalog.has_image(img)) throw ScenarioError(field + ".preloaded_images", "unknown image " + img.str());
      }
      for (const auto& l : nodes[i].preloaded_layers) {
        if (!catalog.has_layer(l)) throw ScenarioError(field + ".preloaded_layers", "unknown layer " + l.digest());
      }
    }
    if (bandwidth_override && !(*bandwidth_override > 0)) {
      throw ScenarioError("bandwidth_override", "must be positive");
    }
    try {
      scheduler.validate();
    } catch (const InvalidModel& e) {
      throw ScenarioError("schedulers", e.what());
    }
    if (workload.kind == WorkloadKind::random) {
      try {
        workload.validate();
      } catch (const InvalidModel& e) {
        throw ScenarioError("workload", e.what());
      }
      for (const auto& [img, _] : workload.image_weights) {
        if (!catalog.has_image(img)) throw ScenarioError("workload.image_weights", "unknown image " + img.str());
      }
      if (workload.image_weights.empty() && catalog.image_count() == 0) {
        throw ScenarioError("catalog", "catalog has no images");
      }
    } else {
      for (std::size_t i = 0; i < trace.size(); ++i) {
        if (!catalog.has_image(trace[i].image)) {
          throw ScenarioError("workload.trace[" + std::to_string(i) + "]", "unknown image " + trace[i].image.str());
        }
      }
    }
  }

  std::vector<NodeState> initial_cluster() const {
    std::vector<NodeState> cluster;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      NodeSpec spec = nodes[i].spec;
      if (bandwidth_override) spec.bandwidth = *bandwidth_override;
      NodeState state(spec);
      try {
        for (const auto& img : nodes[i].preloaded_images) state = preload_image(std::move(state), img, catalog);
        for (const auto& l : nodes[i].preloaded_layers) state = preload_layer(std::move(state), l, catalog);
      } catch (const CapacityViolation&) {
        throw ScenarioError("nodes[" + std::to_string(i) + "]", "preloaded layers exceed storage");
      }
      cluster.push_back(std::move(state));
    }
    return cluster;
  }

  WorkloadSpec seeded_workload(std::uint64_t s) const {
    WorkloadSpec w = workload;
    w.seed = s;
    return w;
  }

  std::vector<TaskRequest> tasks() const {
    if (workload.kind == WorkloadKind::trace_file) return trace;
    return generate(seeded_workload(seed), catalog);
  }

  SchedulerConfig seeded_scheduler() const {
    SchedulerConfig c = scheduler;
    c.tie_seed = seed;
    return c;
  }
};

struct NodeUsage {
  std::string node_id;
  double cpu = 0;   // committed / capacity
  double mem = 0;
  double disk = 0;  // stored layer bytes / storage capacity
  std::size_t containers = 0;
};

struct StepMetrics {
  std::size_t step = 0;  // 1-based
  std::string task_id;
  std::optional<std::string> node_id;  // nullopt when unschedulable
  Bytes download_bytes = 0;
  double download_seconds = 0;
  double cluster_std = 0;
  std::vector<NodeUsage> usage;
};

struct MaxPods {
  std::map<std::string, std::size_t> per_node;
  std::size_t total = 0;
};

struct SimulationReport {
  std::string fingerprint;
  std::string scheduler_name;
  Policy policy = Policy::default_scheduler;
  std::uint64_t seed = 0;
  std::vector<StepMetrics> steps;
  std::vector<Bytes> cumulative_download;  // prefix sums of step download_bytes
  Bytes total_download_bytes = 0;
  double total_download_seconds = 0;
  double mean_cluster_std = 0;
  std::size_t scheduled = 0;
  std::size_t unschedulable = 0;
  MaxPods max_pods;
  std::vector<NodeUsage> final_usage;
};

inline std::vector<NodeUsage> node_usage(const std::vector<NodeState>& cluster, const LayerCatalog& catalog) {
  std::vector<NodeUsage> out;
  out.reserve(cluster.size());
  for (const auto& n : cluster) {
    out.push_back({n.spec.id, cpu_ratio(n), mem_ratio(n),
                   double(stored_bytes(n, catalog)) / double(n.spec.storage_capacity), n.running.size()});
  }
  return out;
}

/// Mean over nodes of the per-node resource balance score.
inline double cluster_std(const std::vector<NodeState>& cluster) {
  if (cluster.empty()) return 0.0;
  double sum = 0;
  for (const auto& n : cluster) sum += std_score(n);
  return sum / double(cluster.size());
}

// Stable 64-bit FNV-1a, used for scenario fingerprints.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline nlohmann::json describe(const Scenario& s) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : s.nodes) {
    std::vector<std::string> images, layers;
    for (const auto& i : n.preloaded_images) images.push_back(i.str());
    for (const auto& l : n.preloaded_layers) layers.push_back(l.digest());
    nodes.push_back({{"id", n.spec.id},
                     {"cpu", n.spec.cpu_capacity},
                     {"mem", n.spec.mem_capacity},
                     {"bandwidth", n.spec.bandwidth},
                     {"storage", n.spec.storage_capacity},
                     {"max_containers", n.spec.max_containers},
                     {"preloaded_images", images},
                     {"preloaded_layers", layers}});
  }
  nlohmann::json catalog = nlohmann::json::object();
  for (const auto& img : s.catalog.images()) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& [id, size] : s.catalog.layers_of(img)) layers.push_back({id.digest(), size});
    catalog[img.str()] = layers;
  }
  nlohmann::json workload;
  if (s.workload.kind == WorkloadKind::random) {
    nlohmann::json weights = nlohmann::json::array();
    for (const auto& [img, w] : s.workload.image_weights) weights.push_back({img.str(), w});
    workload = {{"kind", "random"},
                {"count", s.workload.count},
                {"cpu", {s.workload.cpu_min, s.workload.cpu_max}},
                {"mem", {s.workload.mem_min, s.workload.mem_max}},
                {"image_weights", weights}};
  } else {
    workload = {{"kind", "trace_file"}, {"trace", trace_to_string(s.trace)}};
  }
  const auto w = s.scheduler.effective_weights();
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& r : w.custom_rules) {
    rules.push_back({r.local_bytes_above ? nlohmann::json(*r.local_bytes_above) : nlohmann::json(),
                     r.cpu_below ? nlohmann::json(*r.cpu_below) : nlohmann::json(),
                     r.std_below ? nlohmann::json(*r.std_below) : nlohmann::json(), r.omega});
  }
  const auto& p = s.scheduler.plugins;
  nlohmann::json scheduler = {
      {"policy", to_string(s.scheduler.policy)},
      {"mode", int(w.mode)},
      {"omega", {w.omega_static, w.omega_high, w.omega_low}},
      {"thresholds", {w.h_size, w.h_cpu, w.h_std}},
      {"rules", rules},
      {"plugins",
       {p.least_allocated.enabled, p.least_allocated.weight, p.balanced_allocation.enabled,
        p.balanced_allocation.weight, p.image_locality.enabled, p.image_locality.weight}},
      {"tie_break", to_string(s.scheduler.tie_break)}};
  return {{"nodes", nodes},
          {"catalog", catalog},
          {"workload", workload},
          {"scheduler", scheduler},
          {"seed", s.seed},
          {"bandwidth_override", s.bandwidth_override ? nlohmann::json(*s.bandwidth_override) : nlohmann::json()}};
}

inline std::string fingerprint(const Scenario& s) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(describe(s).dump())));
  return buf;
}

// max_pods draws from the same distribution as the main run under this
// derived seed.
inline constexpr std::uint64_t kMaxPodsSeedSalt = 0x9e3779b97f4a7c15ULL;

/// Deploys tasks until one fits on no node, and reports how many containers
/// each node holds at that point. Trace workloads stop at the end of the
/// trace.
inline MaxPods max_pods(const Scenario& scenario) {
  scenario.validate();
  auto cluster = scenario.initial_cluster();
  const auto config = scenario.seeded_scheduler();
  std::mt19937_64 tie_rng(config.tie_seed);

  std::optional<TaskStream> stream;
  std::size_t trace_pos = 0;
  if (scenario.workload.kind == WorkloadKind::random) {
    stream.emplace(scenario.seeded_workload(scenario.seed ^ kMaxPodsSeedSalt), scenario.catalog);
  }
  // Every success adds a container, so the container limits bound the loop.
  std::size_t limit = 1;
  for (const auto& n : cluster) limit += std::size_t(n.spec.max_containers);

  for (std::size_t i = 0; i < limit; ++i) {
    TaskRequest task;
    if (stream) {
      task = stream->next();
    } else {
      if (trace_pos >= scenario.trace.size()) break;
      task = scenario.trace[trace_pos++];
    }
    auto outcome = schedule(task, cluster, scenario.catalog, config, &tie_rng);
    auto* p = std::get_if<Placement>(&outcome);
    if (p == nullptr) break;
    for (auto& n : cluster) {
      if (n.spec.id == p->node_id) {
        n = commit_placement(std::move(n), task, scenario.catalog);
        break;
      }
    }
  }

  MaxPods out;
  for (const auto& n : cluster) {
    out.per_node[n.spec.id] = n.running.size();
    out.total += n.running.size();
  }
  return out;
}

inline SimulationReport run(const Scenario& scenario) {
  scenario.validate();
  SimulationReport report;
  report.fingerprint = fingerprint(scenario);
  report.scheduler_name = scenario.scheduler_name;
  report.policy = scenario.scheduler.policy;
  report.seed = scenario.seed;

  auto cluster = scenario.initial_cluster();
  const auto tasks = scenario.tasks();
  const auto config = scenario.seeded_scheduler();
  std::mt19937_64 tie_rng(config.tie_seed);

  Bytes cumulative = 0;
  double std_sum = 0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& task = tasks[i];
    StepMetrics m;
    m.step = i + 1;
    m.task_id = task.task_id;
    auto outcome = schedule(task, cluster, scenario.catalog, config, &tie_rng);
    if (auto* p = std::get_if<Placement>(&outcome)) {
      for (auto& n : cluster) {
        if (n.spec.id == p->node_id) {
          n = commit_placement(std::move(n), task, scenario.catalog);
          break;
        }
      }
      m.node_id = p->node_id;
      m.download_bytes = p->download_bytes;
      m.download_seconds = p->download_seconds;
      ++report.scheduled;
    } else {
      ++report.unschedulable;
    }
    m.cluster_std = cluster_std(cluster);
    m.usage = node_usage(cluster, scenario.catalog);
    cumulative += m.download_bytes;
    report.cumulative_download.push_back(cumulative);
    report.total_download_seconds += m.download_seconds;
    std_sum += m.cluster_std;
    report.steps.push_back(std::move(m));
  }
  report.total_download_bytes = cumulative;
  report.mean_cluster_std = tasks.empty() ? 0.0 : std_sum / double(tasks.size());
  report.final_usage = node_usage(cluster, scenario.catalog);
  report.max_pods = max_pods(scenario);
  return report;
}

struct PolicySummary {
  std::string scheduler_name;
  Policy policy = Policy::default_scheduler;
  Bytes total_download_bytes = 0;
  double total_download_seconds = 0;
  double mean_cluster_std = 0;
  std::size_t max_pods_total = 0;
  double mean_disk_usage = 0;  // final, averaged over nodes
  std::size_t unschedulable = 0;
};

struct PolicyDelta {
  std::string scheduler_name;
  // Percentage change relative to the reference run; nullopt when the
  // reference is zero and this run is not.
  std::optional<double> download_bytes_pct;
  std::optional<double> download_seconds_pct;
  std::optional<double> cluster_std_pct;
  std::optional<double> max_pods_pct;
  std::optional<double> disk_usage_pct;
};

struct ComparisonReport {
  std::uint64_t seed = 0;
  std::string reference;  // scheduler the deltas are relative to
  std::vector<SimulationReport> runs;
  std::vector<PolicySummary> summaries;
  std::vector<PolicyDelta> deltas;
};

inline PolicySummary summarize(const SimulationReport& r) {
  PolicySummary s;
  s.scheduler_name = r.scheduler_name;
  s.policy = r.policy;
  s.total_download_bytes = r.total_download_bytes;
  s.total_download_seconds = r.total_download_seconds;
  s.mean_cluster_std = r.mean_cluster_std;
  s.max_pods_total = r.max_pods.total;
  for (const auto& u : r.final_usage) s.mean_disk_usage += u.disk;
  if (!r.final_usage.empty()) s.mean_disk_usage /= double(r.final_usage.size());
  s.unschedulable = r.unschedulable;
  return s;
}

inline std::optional<double> percent_change(double value, double reference) {
  if (reference == 0) return value == 0 ? std::optional<double>(0.0) : std::nullopt;
  return (value - reference) / reference * 100.0;
}

/// Deltas for already-computed runs that share one workload. The reference
/// is the first default-policy run, else the first run.
inline ComparisonReport make_comparison(std::vector<SimulationReport> runs) {
  ComparisonReport out;
  if (runs.empty()) return out;
  out.seed = runs.front().seed;
  for (const auto& r : runs) out.summaries.push_back(summarize(r));
  std::size_t ref = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].policy == Policy::default_scheduler) {
      ref = i;
      break;
    }
  }
  out.reference = out.summaries[ref].scheduler_name;
  const auto& base = out.summaries[ref];
  for (const auto& s : out.summaries) {
    out.deltas.push_back({s.scheduler_name, percent_change(double(s.total_download_bytes), double(base.total_download_bytes)),
                          percent_change(s.total_download_seconds, base.total_download_seconds),
                          percent_change(s.mean_cluster_std, base.mean_cluster_std),
                          percent_change(double(s.max_pods_total), double(base.max_pods_total)),
                          percent_change(s.mean_disk_usage, base.mean_disk_usage)});
  }
  out.runs = std::move(runs);
  return out;
}

/// Scenarios must differ only in their scheduler; anything else is a
/// ComparisonError.
inline void check_comparable(const std::vector<Scenario>& scenarios) {
  if (scenarios.empty()) throw ComparisonError("nothing to compare");
  auto strip = [](const Scenario& s) {
    auto d = describe(s);
    d.erase("scheduler");
    return d;
  };
  const auto first = strip(scenarios.front());
  for (std::size_t i = 1; i < scenarios.size(); ++i) {
    if (strip(scenarios[i]) != first) {
      throw ComparisonError("scenario for '" + scenarios[i].scheduler_name +
                            "' differs from '" + scenarios.front().scheduler_name + "' beyond its scheduler");
    }
  }
}

inline ComparisonReport compare(const std::vector<Scenario>& scenarios) {
  check_comparable(scenarios);
  std::vector<SimulationReport> runs;
  for (const auto& s : scenarios) runs.push_back(run(s));
  return make_comparison(std::move(runs));
}

}  // namespace lrsched
