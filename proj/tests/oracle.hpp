#pragma once

// Straight-line reimplementation of the scoring and placement rules over
// plain std containers. Shares no code with lrsched; tests compare the two.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace oracle {

struct Catalog {
  std::map<std::string, std::int64_t> layer_size;
  std::map<std::string, std::vector<std::string>> images;  // "name:tag" -> digests
};

struct Node {
  std::string id;
  std::int64_t cpu_cap = 0;
  std::int64_t mem_cap = 0;
  std::int64_t storage = 0;
  int max_containers = 0;
  double bandwidth = 0;
  std::set<std::string> layers;
  std::set<std::string> images;
  std::int64_t cpu = 0;
  std::int64_t mem = 0;
  int containers = 0;
};

struct Task {
  std::string id;
  std::string image;
  std::int64_t cpu = 0;
  std::int64_t mem = 0;
};

struct Weights {
  bool dynamic = false;
  double omega = 0;  // fixed mode
  double omega_high = 2;
  double omega_low = 0.5;
  std::int64_t h_size = 10'000'000;
  double h_cpu = 0.6;
  double h_std = 0.16;
};

struct Plugins {
  bool la = true, ba = true, il = true;
  double w_la = 1, w_ba = 1, w_il = 1;
};

inline std::int64_t image_total(const Catalog& c, const std::string& image) {
  std::int64_t t = 0;
  for (const auto& l : c.images.at(image)) t += c.layer_size.at(l);
  return t;
}

inline std::int64_t download(const Catalog& c, const Node& n, const std::string& image) {
  std::int64_t t = 0;
  for (const auto& l : c.images.at(image)) {
    if (n.layers.count(l) == 0) t += c.layer_size.at(l);
  }
  return t;
}

inline std::int64_t local(const Catalog& c, const Node& n, const std::string& image) {
  std::int64_t t = 0;
  for (const auto& l : c.images.at(image)) {
    if (n.layers.count(l) == 1) t += c.layer_size.at(l);
  }
  return t;
}

inline double layer_score(const Catalog& c, const Node& n, const std::string& image) {
  const auto total = image_total(c, image);
  if (total == 0) return 0;
  return 100.0 * double(local(c, n, image)) / double(total);
}

inline double cpu_score(const Node& n) { return double(n.cpu) / double(n.cpu_cap); }

inline double std_score(const Node& n) {
  const double a = double(n.cpu) / double(n.cpu_cap);
  const double b = double(n.mem) / double(n.mem_cap);
  return (a > b ? a - b : b - a) / 2.0;
}

inline int gate(const Weights& w, std::int64_t d, double cpu, double sd) {
  return (d > w.h_size ? 1 : 0) * (cpu < w.h_cpu ? 1 : 0) * (sd < w.h_std ? 1 : 0);
}

inline double omega(const Weights& w, std::int64_t d, double cpu, double sd) {
  if (!w.dynamic) return w.omega;
  return gate(w, d, cpu, sd) == 1 ? w.omega_high : w.omega_low;
}

inline double baseline(const Node& n, const Task& t, const Plugins& p) {
  const double cpu_after = double(n.cpu + t.cpu) / double(n.cpu_cap);
  const double mem_after = double(n.mem + t.mem) / double(n.mem_cap);
  double sum = 0;
  int k = 0;
  if (p.la) {
    sum += p.w_la * 100.0 * ((1.0 - cpu_after) + (1.0 - mem_after)) / 2.0;
    ++k;
  }
  if (p.ba) {
    const double sd = std::fabs(cpu_after - mem_after) / 2.0;
    sum += p.w_ba * 100.0 * (1.0 - 2.0 * sd);
    ++k;
  }
  if (p.il) {
    sum += p.w_il * (n.images.count(t.image) ? 100.0 : 0.0);
    ++k;
  }
  return k == 0 ? 0.0 : sum / k;
}

inline double final_score(const Catalog& c, const Node& n, const Task& t, const Weights& w, const Plugins& p) {
  const auto d = local(c, n, t.image);
  return omega(w, d, cpu_score(n), std_score(n)) * layer_score(c, n, t.image) + baseline(n, t, p);
}

/// "storage", "container_count", "cpu_fit", "mem_fit", or "" when feasible.
inline std::string rejection(const Catalog& c, const Node& n, const Task& t) {
  std::int64_t stored = 0;
  for (const auto& l : n.layers) stored += c.layer_size.at(l);
  if (stored + download(c, n, t.image) > n.storage) return "storage";
  if (n.containers >= n.max_containers) return "container_count";
  if (n.cpu + t.cpu > n.cpu_cap) return "cpu_fit";
  if (n.mem + t.mem > n.mem_cap) return "mem_fit";
  return "";
}

/// Index of the chosen node by exhaustive argmax, ties (within 1e-9) to the
/// lexicographically smallest id; nullopt when nothing fits.
inline std::optional<std::size_t> choose(const Catalog& c, const std::vector<Node>& nodes, const Task& t,
                                         const Weights& w, const Plugins& p) {
  std::vector<double> score(nodes.size(), -1e300);
  bool any = false;
  double best = -1e300;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!rejection(c, nodes[i], t).empty()) continue;
    score[i] = final_score(c, nodes[i], t, w, p);
    if (score[i] > best) best = score[i];
    any = true;
  }
  if (!any) return std::nullopt;
  std::optional<std::size_t> pick;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (score[i] < best - 1e-9 || !rejection(c, nodes[i], t).empty()) continue;
    if (!pick || nodes[i].id < nodes[*pick].id) pick = i;
  }
  return pick;
}

inline void place(const Catalog& c, Node& n, const Task& t) {
  for (const auto& l : c.images.at(t.image)) n.layers.insert(l);
  n.images.insert(t.image);
  n.cpu += t.cpu;
  n.mem += t.mem;
  ++n.containers;
}

/// Node id per task ("" for unschedulable).
inline std::vector<std::string> trace(const Catalog& c, std::vector<Node> nodes, const std::vector<Task>& tasks,
                                      const Weights& w, const Plugins& p) {
  std::vector<std::string> out;
  for (const auto& t : tasks) {
    auto i = choose(c, nodes, t, w, p);
    if (!i) {
      out.emplace_back();
      continue;
    }
    place(c, nodes[*i], t);
    out.push_back(nodes[*i].id);
  }
  return out;
}

}  // namespace oracle
