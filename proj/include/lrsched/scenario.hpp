#pragma once

// Scenario files: the JSON document the CLI runs. Quantities accept unit
// suffixes ("4GB", "500m", "10MB/s"); plain numbers are base units (bytes,
// millicores, bytes/s).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lrsched/registry.hpp"
#include "lrsched/simulator.hpp"
#include "lrsched/units.hpp"

namespace lrsched {

struct SchedulerEntry {
  std::string name;
  SchedulerConfig config;
};

struct ScenarioFile {
  std::filesystem::path source;
  std::string description;
  std::vector<NodeSetup> nodes;
  LayerCatalog catalog;
  WorkloadSpec workload;
  std::vector<TaskRequest> trace;
  std::vector<SchedulerEntry> schedulers;
  std::vector<double> bandwidth_sweep;
  std::vector<std::size_t> node_count_sweep;
  std::vector<std::uint64_t> seeds{0};
  std::string output;
  std::vector<std::string> warnings;  // e.g. stale registry metadata

  const SchedulerEntry& scheduler(const std::string& name) const {
    for (const auto& s : schedulers) {
      if (s.name == name) return s;
    }
    throw ScenarioError("schedulers", "no scheduler named '" + name + "'");
  }

  /// First `count` nodes; when `count` exceeds the declared nodes they are
  /// reused cyclically with suffixed ids ("worker-1-r1").
  std::vector<NodeSetup> nodes_for_count(std::size_t count) const {
    if (count == 0) throw ScenarioError("sweeps.node_count", "node count must be positive");
    std::vector<NodeSetup> out;
    for (std::size_t i = 0; i < count; ++i) {
      NodeSetup n = nodes[i % nodes.size()];
      if (i >= nodes.size()) n.spec.id += "-r" + std::to_string(i / nodes.size());
      out.push_back(std::move(n));
    }
    return out;
  }

  Scenario scenario(const SchedulerEntry& entry, std::uint64_t seed) const {
    Scenario s;
    s.nodes = nodes;
    s.catalog = catalog;
    s.workload = workload;
    s.trace = trace;
    s.scheduler_name = entry.name;
    s.scheduler = entry.config;
    s.seed = seed;
    return s;
  }

  Scenario scenario(const std::string& scheduler_name, std::uint64_t seed) const {
    return scenario(scheduler(scheduler_name), seed);
  }
};

namespace detail {

inline std::string join_path(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

inline void reject_unknown_keys(const nlohmann::json& obj, const std::string& field,
                                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ScenarioError(field.empty() ? "<root>" : field, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ScenarioError(join_path(field, key), "unknown key");
  }
}

inline const nlohmann::json& require(const nlohmann::json& obj, const std::string& field, const char* key) {
  if (!obj.contains(key)) throw ScenarioError(join_path(field, key), "missing required key");
  return obj.at(key);
}

template <typename Parse>
auto quantity(const nlohmann::json& v, const std::string& field, Parse parse) -> decltype(parse(std::string_view{})) {
  using T = decltype(parse(std::string_view{}));
  try {
    if (v.is_string()) return parse(v.get<std::string>());
    if (v.is_number()) {
      if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer() || v.get<long long>() < 0) throw std::invalid_argument("expected a non-negative integer");
        return T(v.get<long long>());
      } else {
        return v.get<double>();
      }
    }
  } catch (const std::exception& e) {
    throw ScenarioError(field, e.what());
  }
  throw ScenarioError(field, "expected a number or a quantity string");
}

inline Bytes bytes_field(const nlohmann::json& v, const std::string& field) {
  return quantity(v, field, [](std::string_view s) { return parse_bytes(s); });
}
inline Millicores cpu_field(const nlohmann::json& v, const std::string& field) {
  // Bare numbers in a scenario are cores, matching Kubernetes notation.
  if (v.is_number()) {
    if (!(v.get<double>() > 0)) throw ScenarioError(field, "must be positive");
    return Millicores(std::llround(v.get<double>() * 1000.0));
  }
  return quantity(v, field, [](std::string_view s) { return parse_millicores(s); });
}
inline double bandwidth_field(const nlohmann::json& v, const std::string& field) {
  double b = quantity(v, field, [](std::string_view s) { return parse_bandwidth(s); });
  if (!(b > 0)) throw ScenarioError(field, "must be positive");
  return b;
}

template <typename T>
T typed(const nlohmann::json& v, const std::string& field) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ScenarioError(field, "wrong type");
  }
}

inline ImageRef image_field(const std::string& text, const std::string& field) {
  try {
    return ImageRef::parse(text);
  } catch (const InvalidModel& e) {
    throw ScenarioError(field, e.what());
  }
}

inline PluginSetting plugin_setting(const nlohmann::json& v, const std::string& field) {
  PluginSetting s;
  if (v.is_boolean()) {
    s.enabled = v.get<bool>();
    return s;
  }
  reject_unknown_keys(v, field, {"enabled", "weight"});
  if (v.contains("enabled")) s.enabled = typed<bool>(v.at("enabled"), field + ".enabled");
  if (v.contains("weight")) s.weight = typed<double>(v.at("weight"), field + ".weight");
  if (!(s.weight >= 0)) throw ScenarioError(field + ".weight", "must be >= 0");
  return s;
}

inline SchedulerEntry parse_scheduler(const nlohmann::json& j, const std::string& field) {
  reject_unknown_keys(j, field,
                      {"name", "policy", "omega", "omega_high", "omega_low", "h_size", "h_cpu", "h_std", "weight_mode",
                       "custom_rules", "plugins", "tie_break"});
  SchedulerEntry e;
  const auto policy_text = typed<std::string>(require(j, field, "policy"), field + ".policy");
  auto policy = parse_policy(policy_text);
  if (!policy) throw ScenarioError(field + ".policy", "unknown policy '" + policy_text + "'");
  e.name = j.contains("name") ? typed<std::string>(j.at("name"), field + ".name") : policy_text;

  switch (*policy) {
    case Policy::default_scheduler: e.config = SchedulerConfig::default_scheduler(); break;
    case Policy::layer_static: e.config = SchedulerConfig::layer_static(); break;
    case Policy::lr_dynamic: e.config = SchedulerConfig::lr_dynamic(); break;
  }
  auto& w = e.config.weights;
  if (j.contains("omega")) {
    if (*policy != Policy::layer_static) throw ScenarioError(field + ".omega", "only valid for layer_static");
    w.omega_static = typed<double>(j.at("omega"), field + ".omega");
  }
  const bool dynamic_keys = j.contains("omega_high") || j.contains("omega_low") || j.contains("h_size") ||
                            j.contains("h_cpu") || j.contains("h_std") || j.contains("weight_mode") ||
                            j.contains("custom_rules");
  if (dynamic_keys && *policy != Policy::lr_dynamic) {
    throw ScenarioError(field, "weight thresholds are only valid for lr_dynamic");
  }
  if (j.contains("omega_high")) w.omega_high = typed<double>(j.at("omega_high"), field + ".omega_high");
  if (j.contains("omega_low")) w.omega_low = typed<double>(j.at("omega_low"), field + ".omega_low");
  if (j.contains("h_size")) w.h_size = bytes_field(j.at("h_size"), field + ".h_size");
  if (j.contains("h_cpu")) w.h_cpu = typed<double>(j.at("h_cpu"), field + ".h_cpu");
  if (j.contains("h_std")) w.h_std = typed<double>(j.at("h_std"), field + ".h_std");
  if (j.contains("weight_mode")) {
    auto mode = typed<std::string>(j.at("weight_mode"), field + ".weight_mode");
    if (mode == "dynamic") {
      w.mode = WeightMode::dynamic;
    } else if (mode == "custom") {
      w.mode = WeightMode::custom;
    } else {
      throw ScenarioError(field + ".weight_mode", "expected 'dynamic' or 'custom'");
    }
  }
  if (j.contains("custom_rules")) {
    const auto& rules = j.at("custom_rules");
    if (!rules.is_array()) throw ScenarioError(field + ".custom_rules", "expected an array");
    for (std::size_t i = 0; i < rules.size(); ++i) {
      const std::string rf = field + ".custom_rules[" + std::to_string(i) + "]";
      reject_unknown_keys(rules[i], rf, {"local_bytes_above", "cpu_below", "std_below", "omega"});
      WeightRule r;
      r.omega = typed<double>(require(rules[i], rf, "omega"), rf + ".omega");
      if (rules[i].contains("local_bytes_above")) r.local_bytes_above = bytes_field(rules[i].at("local_bytes_above"), rf + ".local_bytes_above");
      if (rules[i].contains("cpu_below")) r.cpu_below = typed<double>(rules[i].at("cpu_below"), rf + ".cpu_below");
      if (rules[i].contains("std_below")) r.std_below = typed<double>(rules[i].at("std_below"), rf + ".std_below");
      w.custom_rules.push_back(r);
    }
    if (w.mode != WeightMode::custom) throw ScenarioError(field + ".custom_rules", "requires weight_mode 'custom'");
  }
  if (j.contains("plugins")) {
    const auto& p = j.at("plugins");
    const std::string pf = field + ".plugins";
    reject_unknown_keys(p, pf, {"least_allocated", "balanced_allocation", "image_locality"});
    if (p.contains("least_allocated")) e.config.plugins.least_allocated = plugin_setting(p.at("least_allocated"), pf + ".least_allocated");
    if (p.contains("balanced_allocation")) e.config.plugins.balanced_allocation = plugin_setting(p.at("balanced_allocation"), pf + ".balanced_allocation");
    if (p.contains("image_locality")) e.config.plugins.image_locality = plugin_setting(p.at("image_locality"), pf + ".image_locality");
  }
  if (j.contains("tie_break")) {
    auto t = typed<std::string>(j.at("tie_break"), field + ".tie_break");
    if (t == "lowest_node_id") {
      e.config.tie_break = TieBreak::lowest_node_id;
    } else if (t == "random_seeded") {
      e.config.tie_break = TieBreak::random_seeded;
    } else {
      throw ScenarioError(field + ".tie_break", "expected 'lowest_node_id' or 'random_seeded'");
    }
  }
  try {
    e.config.validate();
  } catch (const InvalidModel& ex) {
    throw ScenarioError(field, ex.what());
  }
  return e;
}

inline std::vector<SchedulerEntry> default_schedulers() {
  return {{"default", SchedulerConfig::default_scheduler()},
          {"layer_static", SchedulerConfig::layer_static(4.0)},
          {"lr_dynamic", SchedulerConfig::lr_dynamic()}};
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError(path.string(), "cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace detail

struct ScenarioLoadOptions {
  std::optional<std::string> registry_url;  // overrides registry.url
  std::optional<std::string> output;        // overrides output
};

/// Parses a scenario document. Relative paths resolve against `base_dir`.
inline ScenarioFile parse_scenario(const nlohmann::json& root, const std::filesystem::path& base_dir,
                                   const ScenarioLoadOptions& options = {}) {
  using namespace detail;
  reject_unknown_keys(root, "",
                      {"description", "nodes", "catalog", "registry", "workload", "schedulers", "sweeps", "seeds",
                       "output"});
  ScenarioFile f;
  if (root.contains("description")) f.description = typed<std::string>(root.at("description"), "description");

  // Catalog first: nodes and workload reference its images.
  if (root.contains("catalog") == root.contains("registry")) {
    throw ScenarioError("catalog", "exactly one of 'catalog' or 'registry' is required");
  }
  try {
    if (root.contains("catalog")) {
      const auto& c = root.at("catalog");
      reject_unknown_keys(c, "catalog", {"cache", "inline"});
      if (c.contains("cache") == c.contains("inline")) {
        throw ScenarioError("catalog", "exactly one of 'cache' or 'inline' is required");
      }
      if (c.contains("cache")) {
        auto path = base_dir / typed<std::string>(c.at("cache"), "catalog.cache");
        try {
          f.catalog = catalog_from_cache(load_cache(path));
        } catch (const Error& e) {
          throw ScenarioError("catalog.cache", e.what());
        }
      } else {
        try {
          f.catalog = catalog_from_cache(cache_from_string(c.at("inline").dump()));
        } catch (const Error& e) {
          throw ScenarioError("catalog.inline", e.what());
        }
      }
    } else {
      const auto& r = root.at("registry");
      reject_unknown_keys(r, "registry", {"url", "cache", "poll_interval"});
      RegistryConfig cfg;
      cfg.base_url = options.registry_url ? *options.registry_url : typed<std::string>(require(r, "registry", "url"), "registry.url");
      cfg.cache_path = base_dir / (r.contains("cache") ? typed<std::string>(r.at("cache"), "registry.cache") : "cache.json");
      RefreshResult refreshed;
      try {
        refreshed = refresh_cache(cfg);
      } catch (const Error& e) {
        throw ScenarioError("registry", e.what());
      }
      f.warnings = refreshed.warnings;
      try {
        f.catalog = catalog_from_cache(refreshed.lists);
      } catch (const Error& e) {
        throw ScenarioError("registry", e.what());
      }
    }
  } catch (const InvalidModel& e) {
    throw ScenarioError("catalog", e.what());
  }

  const auto& nodes = require(root, "", "nodes");
  if (!nodes.is_array() || nodes.empty()) throw ScenarioError("nodes", "expected a non-empty array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string nf = "nodes[" + std::to_string(i) + "]";
    const auto& n = nodes[i];
    reject_unknown_keys(n, nf,
                        {"id", "cpu", "memory", "bandwidth", "storage", "max_containers", "preloaded_images",
                         "preloaded_layers"});
    NodeSetup setup;
    setup.spec.id = typed<std::string>(require(n, nf, "id"), nf + ".id");
    setup.spec.cpu_capacity = cpu_field(require(n, nf, "cpu"), nf + ".cpu");
    setup.spec.mem_capacity = bytes_field(require(n, nf, "memory"), nf + ".memory");
    setup.spec.bandwidth = bandwidth_field(require(n, nf, "bandwidth"), nf + ".bandwidth");
    setup.spec.storage_capacity = bytes_field(require(n, nf, "storage"), nf + ".storage");
    setup.spec.max_containers = n.contains("max_containers") ? typed<int>(n.at("max_containers"), nf + ".max_containers") : 110;
    if (n.contains("preloaded_images")) {
      for (const auto& img : n.at("preloaded_images")) {
        setup.preloaded_images.push_back(image_field(typed<std::string>(img, nf + ".preloaded_images"), nf + ".preloaded_images"));
      }
    }
    if (n.contains("preloaded_layers")) {
      for (const auto& l : n.at("preloaded_layers")) {
        auto digest = typed<std::string>(l, nf + ".preloaded_layers");
        if (digest.empty()) throw ScenarioError(nf + ".preloaded_layers", "empty digest");
        setup.preloaded_layers.emplace_back(digest);
      }
    }
    f.nodes.push_back(std::move(setup));
  }

  const auto& w = require(root, "", "workload");
  reject_unknown_keys(w, "workload", {"kind", "count", "cpu", "memory", "image_weights", "path"});
  const auto kind = w.contains("kind") ? typed<std::string>(w.at("kind"), "workload.kind") : std::string("random");
  if (kind == "random") {
    f.workload.kind = WorkloadKind::random;
    f.workload.count = typed<std::size_t>(require(w, "workload", "count"), "workload.count");
    if (w.contains("cpu")) {
      const auto& r = w.at("cpu");
      if (!r.is_array() || r.size() != 2) throw ScenarioError("workload.cpu", "expected [min, max]");
      f.workload.cpu_min = cpu_field(r[0], "workload.cpu[0]");
      f.workload.cpu_max = cpu_field(r[1], "workload.cpu[1]");
    }
    if (w.contains("memory")) {
      const auto& r = w.at("memory");
      if (!r.is_array() || r.size() != 2) throw ScenarioError("workload.memory", "expected [min, max]");
      f.workload.mem_min = bytes_field(r[0], "workload.memory[0]");
      f.workload.mem_max = bytes_field(r[1], "workload.memory[1]");
    }
    if (w.contains("image_weights")) {
      const auto& iw = w.at("image_weights");
      if (!iw.is_object()) throw ScenarioError("workload.image_weights", "expected an object");
      for (const auto& [key, value] : iw.items()) {
        f.workload.image_weights.emplace_back(image_field(key, "workload.image_weights"),
                                              typed<double>(value, "workload.image_weights." + key));
      }
    }
    if (w.contains("path")) throw ScenarioError("workload.path", "only valid for kind 'trace_file'");
  } else if (kind == "trace_file") {
    f.workload.kind = WorkloadKind::trace_file;
    f.workload.trace_path = base_dir / typed<std::string>(require(w, "workload", "path"), "workload.path");
    try {
      f.trace = load_trace(f.workload.trace_path);
    } catch (const TraceCorrupt& e) {
      throw ScenarioError("workload.path", e.what());
    }
    f.workload.count = f.trace.size();
  } else {
    throw ScenarioError("workload.kind", "expected 'random' or 'trace_file'");
  }

  if (root.contains("schedulers")) {
    const auto& s = root.at("schedulers");
    if (!s.is_array() || s.empty()) throw ScenarioError("schedulers", "expected a non-empty array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < s.size(); ++i) {
      auto entry = parse_scheduler(s[i], "schedulers[" + std::to_string(i) + "]");
      if (!names.insert(entry.name).second) {
        throw ScenarioError("schedulers[" + std::to_string(i) + "].name", "duplicate scheduler name");
      }
      f.schedulers.push_back(std::move(entry));
    }
  } else {
    f.schedulers = default_schedulers();
  }

  if (root.contains("sweeps")) {
    const auto& s = root.at("sweeps");
    reject_unknown_keys(s, "sweeps", {"bandwidth", "node_count"});
    if (s.contains("bandwidth")) {
      for (std::size_t i = 0; i < s.at("bandwidth").size(); ++i) {
        f.bandwidth_sweep.push_back(bandwidth_field(s.at("bandwidth")[i], "sweeps.bandwidth[" + std::to_string(i) + "]"));
      }
    }
    if (s.contains("node_count")) {
      for (std::size_t i = 0; i < s.at("node_count").size(); ++i) {
        auto n = typed<std::size_t>(s.at("node_count")[i], "sweeps.node_count[" + std::to_string(i) + "]");
        if (n == 0) throw ScenarioError("sweeps.node_count[" + std::to_string(i) + "]", "must be positive");
        f.node_count_sweep.push_back(n);
      }
    }
  }

  if (root.contains("seeds")) {
    const auto& s = root.at("seeds");
    if (!s.is_array() || s.empty()) throw ScenarioError("seeds", "expected a non-empty array");
    f.seeds.clear();
    for (std::size_t i = 0; i < s.size(); ++i) {
      f.seeds.push_back(typed<std::uint64_t>(s[i], "seeds[" + std::to_string(i) + "]"));
    }
  }
  f.output = options.output ? *options.output
                            : (root.contains("output") ? typed<std::string>(root.at("output"), "output") : "out");

  // Full semantic validation through the same path every run takes.
  for (const auto& entry : f.schedulers) {
    auto s = f.scenario(entry, f.seeds.front());
    s.validate();
    (void)s.initial_cluster();
  }
  return f;
}

inline ScenarioFile load_scenario_file(const std::filesystem::path& path, const ScenarioLoadOptions& options = {}) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(path.string(), std::string("malformed JSON: ") + e.what());
  }
  auto f = parse_scenario(root, path.parent_path(), options);
  f.source = path;
  return f;
}

}  // namespace lrsched
