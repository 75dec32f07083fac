#pragma once

// Node scoring: download cost, layer-sharing score, baseline plugin scores,
// the resource-adaptive weight gate, and the blended final score.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "lrsched/model.hpp"

namespace lrsched {

enum class WeightMode { fixed, dynamic, custom };

/// One row of a custom weight table. A row matches when every condition it
/// sets holds; unset conditions are ignored.
struct WeightRule {
  std::optional<Bytes> local_bytes_above;
  std::optional<double> cpu_below;
  std::optional<double> std_below;
  double omega = 0;
};

struct WeightPolicy {
  WeightMode mode = WeightMode::dynamic;
  double omega_static = 4.0;
  double omega_high = 2.0;
  double omega_low = 0.5;
  Bytes h_size = 10 * kMB;
  double h_cpu = 0.6;
  double h_std = 0.16;
  // Used in custom mode: first matching rule wins, omega_low otherwise.
  std::vector<WeightRule> custom_rules;

  static WeightPolicy fixed(double omega) {
    WeightPolicy p;
    p.mode = WeightMode::fixed;
    p.omega_static = omega;
    return p;
  }

  void validate() const {
    if (mode == WeightMode::fixed && !(omega_static >= 0)) throw InvalidModel("omega must be >= 0");
    if (mode == WeightMode::dynamic || mode == WeightMode::custom) {
      if (!(omega_low >= 0) || !(omega_high >= omega_low)) {
        throw InvalidModel("weights must satisfy omega_high >= omega_low >= 0");
      }
      if (h_size < 0) throw InvalidModel("h_size must be >= 0");
      if (!(h_cpu >= 0 && h_cpu <= 1)) throw InvalidModel("h_cpu must lie in [0,1]");
      if (!(h_std >= 0 && h_std <= 0.5)) throw InvalidModel("h_std must lie in [0,0.5]");
    }
    for (const auto& r : custom_rules) {
      if (!(r.omega >= 0)) throw InvalidModel("custom weight rule omega must be >= 0");
    }
  }
};

struct PluginSetting {
  bool enabled = true;
  double weight = 1.0;
};

/// Baseline (default scheduler) score plugins.
struct PluginConfig {
  PluginSetting least_allocated;
  PluginSetting balanced_allocation;
  PluginSetting image_locality;

  int enabled_count() const {
    return int(least_allocated.enabled) + int(balanced_allocation.enabled) + int(image_locality.enabled);
  }
};

struct ScoreBreakdown {
  double layer_score = 0;     // [0,100]
  double baseline_score = 0;  // >= 0
  double std_score = 0;       // [0,0.5]
  double cpu_score = 0;       // [0,1]
  int weight_gate = 0;        // {0,1}
  double omega_used = 0;
  double final_score = 0;     // omega_used * layer_score + baseline_score
  Bytes local_layer_bytes = 0;
  Bytes download_bytes = 0;

  bool operator==(const ScoreBreakdown&) const = default;
};

/// Bytes the node must pull to run `image`.
inline Bytes download_cost(const LayerCatalog& catalog, const NodeState& node, const ImageRef& image) {
  return missing_bytes(node, image, catalog);
}

/// Bytes of `image` already present on the node.
inline Bytes local_layer_size(const LayerCatalog& catalog, const NodeState& node, const ImageRef& image) {
  Bytes total = 0;
  for (const auto& l : catalog.image_layers(image)) {
    if (node.local_layers.contains(l)) total += catalog.layer_size(l);
  }
  return total;
}

/// Share of the image's bytes already on the node, scaled to [0,100]. An
/// image without layers scores 0.
inline double layer_score(const LayerCatalog& catalog, const NodeState& node, const ImageRef& image) {
  const Bytes total = catalog.image_size(image);
  if (total == 0) return 0.0;
  return double(local_layer_size(catalog, node, image)) / double(total) * 100.0;
}

inline double cpu_ratio(const NodeState& node) {
  return double(node.cpu_committed) / double(node.spec.cpu_capacity);
}

inline double mem_ratio(const NodeState& node) {
  return double(node.mem_committed) / double(node.spec.mem_capacity);
}

/// Resource balance: half the gap between CPU and memory utilisation.
inline double std_score(const NodeState& node) { return std::abs(cpu_ratio(node) - mem_ratio(node)) / 2.0; }

inline double cpu_score(const NodeState& node) { return cpu_ratio(node); }

struct GateInputs {
  Bytes local_layer_bytes = 0;
  double cpu_score = 0;
  double std_score = 0;
};

/// 1 when the node already holds enough of the image and is lightly and
/// evenly loaded. All comparisons are strict.
inline int weight_gate(const WeightPolicy& policy, const GateInputs& in) {
  return (in.local_layer_bytes > policy.h_size && in.cpu_score < policy.h_cpu && in.std_score < policy.h_std) ? 1
                                                                                                          : 0;
}

inline int weight_gate(const WeightPolicy& policy, Bytes local_layer_bytes, double cpu, double std_dev) {
  return weight_gate(policy, GateInputs{local_layer_bytes, cpu, std_dev});
}

namespace detail {
inline std::optional<double> match_custom_rule(const WeightPolicy& policy, const GateInputs& in) {
  for (const auto& r : policy.custom_rules) {
    if (r.local_bytes_above && !(in.local_layer_bytes > *r.local_bytes_above)) continue;
    if (r.cpu_below && !(in.cpu_score < *r.cpu_below)) continue;
    if (r.std_below && !(in.std_score < *r.std_below)) continue;
    return r.omega;
  }
  return std::nullopt;
}
}  // namespace detail

/// Gate value recorded for a node under any weight mode: the gate itself in
/// dynamic mode, "a rule matched" in custom mode, 0 in fixed mode.
inline int gate_for(const WeightPolicy& policy, const GateInputs& in) {
  switch (policy.mode) {
    case WeightMode::fixed: return 0;
    case WeightMode::dynamic: return weight_gate(policy, in);
    case WeightMode::custom: return detail::match_custom_rule(policy, in) ? 1 : 0;
  }
  return 0;
}

inline double omega_for(const WeightPolicy& policy, const GateInputs& in) {
  switch (policy.mode) {
    case WeightMode::fixed: return policy.omega_static;
    case WeightMode::dynamic: return weight_gate(policy, in) == 1 ? policy.omega_high : policy.omega_low;
    case WeightMode::custom: return detail::match_custom_rule(policy, in).value_or(policy.omega_low);
  }
  return 0;
}

/// Blends the layer score into the baseline. In custom mode the gate only
/// says whether a rule matched, so prefer score_node there.
inline ScoreBreakdown final_score(const WeightPolicy& policy, double layer, double baseline, int gate) {
  ScoreBreakdown b;
  b.layer_score = layer;
  b.baseline_score = baseline;
  b.weight_gate = gate;
  switch (policy.mode) {
    case WeightMode::fixed: b.omega_used = policy.omega_static; break;
    case WeightMode::dynamic:
    case WeightMode::custom: b.omega_used = gate == 1 ? policy.omega_high : policy.omega_low; break;
  }
  b.final_score = b.omega_used * layer + baseline;
  return b;
}

/// Weighted mean of the enabled baseline plugins, each on [0,100]:
/// LeastAllocated (free share after placement), BalancedAllocation
/// (1 - |cpu - mem| after placement) and ImageLocality (100 when the exact
/// image is already on the node).
inline double baseline_score(const NodeState& node, const TaskRequest& task, const PluginConfig& plugins) {
  const int enabled = plugins.enabled_count();
  if (enabled == 0) return 0.0;
  const double cpu_cap = double(node.spec.cpu_capacity);
  const double mem_cap = double(node.spec.mem_capacity);
  const double cpu_after = double(node.cpu_committed + task.cpu_request) / cpu_cap;
  const double mem_after = double(node.mem_committed + task.mem_request) / mem_cap;

  double sum = 0;
  if (plugins.least_allocated.enabled) {
    const double cpu_free = (cpu_cap - double(node.cpu_committed) - double(task.cpu_request)) / cpu_cap;
    const double mem_free = (mem_cap - double(node.mem_committed) - double(task.mem_request)) / mem_cap;
    sum += plugins.least_allocated.weight * ((cpu_free + mem_free) / 2.0 * 100.0);
  }
  if (plugins.balanced_allocation.enabled) {
    const double std_after = std::abs(cpu_after - mem_after) / 2.0;
    sum += plugins.balanced_allocation.weight * ((1.0 - 2.0 * std_after) * 100.0);
  }
  if (plugins.image_locality.enabled) {
    sum += plugins.image_locality.weight * (node.local_images.contains(task.image) ? 100.0 : 0.0);
  }
  return sum / double(enabled);
}

inline double baseline_score(const NodeState& node, const TaskRequest& task, const LayerCatalog& /*catalog*/,
                             const PluginConfig& plugins) {
  return baseline_score(node, task, plugins);
}

/// Full breakdown for one candidate node. Gate inputs use the node's state
/// before placement.
inline ScoreBreakdown score_node(const NodeState& node, const TaskRequest& task, const LayerCatalog& catalog,
                                 const WeightPolicy& policy, const PluginConfig& plugins) {
  ScoreBreakdown b;
  b.local_layer_bytes = local_layer_size(catalog, node, task.image);
  b.download_bytes = download_cost(catalog, node, task.image);
  b.layer_score = layer_score(catalog, node, task.image);
  b.std_score = std_score(node);
  b.cpu_score = cpu_score(node);
  const GateInputs in{b.local_layer_bytes, b.cpu_score, b.std_score};
  b.weight_gate = gate_for(policy, in);
  b.omega_used = omega_for(policy, in);
  b.baseline_score = baseline_score(node, task, plugins);
  b.final_score = b.omega_used * b.layer_score + b.baseline_score;
  return b;
}

}  // namespace lrsched
