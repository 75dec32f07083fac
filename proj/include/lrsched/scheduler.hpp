#pragma once

// Filter -> score -> argmax pipeline for a single task, and its sequential
// composition over a task trace.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lrsched/model.hpp"
#include "lrsched/scoring.hpp"

namespace lrsched {

enum class Policy { default_scheduler, layer_static, lr_dynamic };
enum class TieBreak { lowest_node_id, random_seeded };

inline std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::default_scheduler: return "default";
    case Policy::layer_static: return "layer_static";
    case Policy::lr_dynamic: return "lr_dynamic";
  }
  return "unknown";
}

inline std::optional<Policy> parse_policy(std::string_view s) {
  if (s == "default") return Policy::default_scheduler;
  if (s == "layer_static") return Policy::layer_static;
  if (s == "lr_dynamic") return Policy::lr_dynamic;
  return std::nullopt;
}

inline std::string_view to_string(TieBreak t) {
  return t == TieBreak::lowest_node_id ? "lowest_node_id" : "random_seeded";
}

// Scores closer than this are treated as a tie.
inline constexpr double kScoreTieEpsilon = 1e-9;

struct SchedulerConfig {
  Policy policy = Policy::lr_dynamic;
  WeightPolicy weights;  // fixed omega for layer_static, dynamic/custom for lr_dynamic
  PluginConfig plugins;
  TieBreak tie_break = TieBreak::lowest_node_id;
  std::uint64_t tie_seed = 0;

  static SchedulerConfig default_scheduler() {
    SchedulerConfig c;
    c.policy = Policy::default_scheduler;
    c.weights = WeightPolicy::fixed(0.0);
    return c;
  }

  static SchedulerConfig layer_static(double omega = 4.0) {
    SchedulerConfig c;
    c.policy = Policy::layer_static;
    c.weights = WeightPolicy::fixed(omega);
    return c;
  }

  static SchedulerConfig lr_dynamic(WeightPolicy weights = {}) {
    SchedulerConfig c;
    c.policy = Policy::lr_dynamic;
    c.weights = std::move(weights);
    return c;
  }

  /// The weight policy actually applied. The default scheduler still
  /// computes the layer term but blends it with omega = 0.
  WeightPolicy effective_weights() const {
    switch (policy) {
      case Policy::default_scheduler: return WeightPolicy::fixed(0.0);
      case Policy::layer_static: return WeightPolicy::fixed(weights.omega_static);
      case Policy::lr_dynamic: {
        WeightPolicy w = weights;
        if (w.mode == WeightMode::fixed) w.mode = WeightMode::dynamic;
        return w;
      }
    }
    return weights;
  }

  void validate() const { effective_weights().validate(); }
};

struct FilterVerdict {
  std::string node_id;
  bool feasible = true;
  std::optional<Constraint> rejected_by;

  bool operator==(const FilterVerdict&) const = default;
};

struct Placement {
  std::string task_id;
  std::string node_id;
  Bytes download_bytes = 0;
  double download_seconds = 0;
  std::map<std::string, ScoreBreakdown> scores;  // every feasible node

  bool operator==(const Placement&) const = default;
};

struct Unschedulable {
  std::string task_id;
  std::vector<FilterVerdict> verdicts;

  bool operator==(const Unschedulable&) const = default;
};

using ScheduleResult = std::variant<Placement, Unschedulable>;

/// Storage, container count, CPU fit and memory fit, checked in that order.
inline FilterVerdict filter(const NodeState& node, const TaskRequest& task, const LayerCatalog& catalog) {
  FilterVerdict v{node.spec.id, true, std::nullopt};
  if (auto violated = first_violation(node, task, catalog)) {
    v.feasible = false;
    v.rejected_by = violated;
  }
  return v;
}

/// Places one task. `rng` is only consulted for TieBreak::random_seeded; a
/// null rng falls back to lowest node id.
inline ScheduleResult schedule(const TaskRequest& task, std::span<const NodeState> nodes, const LayerCatalog& catalog,
                               const SchedulerConfig& config, std::mt19937_64* rng = nullptr) {
  if (!catalog.has_image(task.image)) throw UnknownImage(task.image.str());
  const WeightPolicy weights = config.effective_weights();

  std::vector<FilterVerdict> verdicts;
  std::vector<std::size_t> feasible;
  verdicts.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    verdicts.push_back(filter(nodes[i], task, catalog));
    if (verdicts.back().feasible) feasible.push_back(i);
  }
  if (feasible.empty()) return Unschedulable{task.task_id, std::move(verdicts)};

  Placement placement;
  placement.task_id = task.task_id;
  double best = -std::numeric_limits<double>::infinity();
  for (auto i : feasible) {
    auto b = score_node(nodes[i], task, catalog, weights, config.plugins);
    best = std::max(best, b.final_score);
    placement.scores.emplace(nodes[i].spec.id, b);
  }

  std::vector<std::size_t> tied;
  for (auto i : feasible) {
    if (placement.scores.at(nodes[i].spec.id).final_score >= best - kScoreTieEpsilon) tied.push_back(i);
  }
  std::sort(tied.begin(), tied.end(), [&](auto a, auto b) { return nodes[a].spec.id < nodes[b].spec.id; });
  std::size_t chosen = tied.front();
  if (config.tie_break == TieBreak::random_seeded && rng != nullptr && tied.size() > 1) {
    std::uniform_int_distribution<std::size_t> pick(0, tied.size() - 1);
    chosen = tied[pick(*rng)];
  }

  const NodeState& node = nodes[chosen];
  placement.node_id = node.spec.id;
  placement.download_bytes = placement.scores.at(node.spec.id).download_bytes;
  placement.download_seconds = double(placement.download_bytes) / node.spec.bandwidth;
  return placement;
}

struct TraceResult {
  std::vector<ScheduleResult> outcomes;
  std::vector<NodeState> cluster;
};

/// Schedules tasks in order, committing each placement before the next task
/// is considered. Unschedulable tasks are recorded and dropped.
inline TraceResult schedule_trace(std::span<const TaskRequest> tasks, std::vector<NodeState> cluster,
                                  const LayerCatalog& catalog, const SchedulerConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.tie_seed);
  TraceResult result;
  result.outcomes.reserve(tasks.size());
  for (const auto& task : tasks) {
    auto outcome = schedule(task, cluster, catalog, config, &rng);
    if (auto* p = std::get_if<Placement>(&outcome)) {
      for (auto& node : cluster) {
        if (node.spec.id == p->node_id) {
          node = commit_placement(std::move(node), task, catalog);
          break;
        }
      }
    }
    result.outcomes.push_back(std::move(outcome));
  }
  result.cluster = std::move(cluster);
  return result;
}

}  // namespace lrsched
