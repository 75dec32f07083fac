#pragma once

// Seeded task-trace generation and JSON-lines trace files.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lrsched/model.hpp"

namespace lrsched {

enum class WorkloadKind { random, trace_file };

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::random;
  std::size_t count = 0;
  // Empty means uniform over every image in the catalog.
  std::vector<std::pair<ImageRef, double>> image_weights;
  Millicores cpu_min = 100;
  Millicores cpu_max = 1000;
  Bytes mem_min = 64 * kMB;
  Bytes mem_max = 1 * kGB;
  std::uint64_t seed = 0;
  std::filesystem::path trace_path;  // kind == trace_file

  void validate() const {
    if (cpu_min <= 0 || cpu_min > cpu_max) throw InvalidModel("cpu request range must satisfy 0 < min <= max");
    if (mem_min < 0 || mem_min > mem_max) throw InvalidModel("memory request range must satisfy 0 <= min <= max");
    if (!image_weights.empty()) {
      double sum = 0;
      for (const auto& [_, w] : image_weights) {
        if (!(w >= 0)) throw InvalidModel("image weights must be non-negative");
        sum += w;
      }
      if (std::abs(sum - 1.0) > 1e-6) throw InvalidModel("image weights must sum to 1");
    }
  }
};

/// Endless stream of tasks drawn from a WorkloadSpec. generate() takes the
/// first `count` tasks of the same stream.
class TaskStream {
 public:
  TaskStream(const WorkloadSpec& spec, const LayerCatalog& catalog)
      : rng_(spec.seed), cpu_(spec.cpu_min, spec.cpu_max), mem_(spec.mem_min, spec.mem_max) {
    spec.validate();
    std::vector<double> weights;
    if (spec.image_weights.empty()) {
      images_ = catalog.images();
      weights.assign(images_.size(), 1.0);
    } else {
      for (const auto& [image, w] : spec.image_weights) {
        images_.push_back(image);
        weights.push_back(w);
      }
    }
    for (const auto& image : images_) {
      if (!catalog.has_image(image)) throw UnknownImage(image.str());
    }
    if (images_.empty()) throw InvalidModel("workload has no images to draw from");
    pick_ = std::discrete_distribution<std::size_t>(weights.begin(), weights.end());
  }

  TaskRequest next() {
    TaskRequest t;
    t.task_id = "task-" + std::to_string(++issued_);
    t.image = images_[pick_(rng_)];
    t.cpu_request = cpu_(rng_);
    t.mem_request = mem_(rng_);
    return t;
  }

 private:
  std::mt19937_64 rng_;
  std::vector<ImageRef> images_;
  std::discrete_distribution<std::size_t> pick_;
  std::uniform_int_distribution<Millicores> cpu_;
  std::uniform_int_distribution<Bytes> mem_;
  std::size_t issued_ = 0;
};

inline std::vector<TaskRequest> generate(const WorkloadSpec& spec, const LayerCatalog& catalog) {
  std::vector<TaskRequest> out;
  if (spec.count == 0) {
    spec.validate();
    return out;
  }
  TaskStream stream(spec, catalog);
  out.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) out.push_back(stream.next());
  return out;
}

inline nlohmann::json task_to_json(const TaskRequest& t) {
  return {{"task_id", t.task_id},
          {"image_name", t.image.name},
          {"image_tag", t.image.tag},
          {"cpu_millicores", t.cpu_request},
          {"mem_bytes", t.mem_request}};
}

inline std::string trace_to_string(const std::vector<TaskRequest>& trace) {
  std::string out;
  for (const auto& t : trace) {
    out += task_to_json(t).dump();
    out += '\n';
  }
  return out;
}

inline std::vector<TaskRequest> parse_trace(std::istream& in) {
  std::vector<TaskRequest> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      TaskRequest t;
      t.task_id = j.at("task_id").get<std::string>();
      t.image.name = j.at("image_name").get<std::string>();
      t.image.tag = j.at("image_tag").get<std::string>();
      t.cpu_request = j.at("cpu_millicores").get<Millicores>();
      t.mem_request = j.at("mem_bytes").get<Bytes>();
      if (t.task_id.empty() || t.image.name.empty() || t.image.tag.empty()) {
        throw TraceCorrupt(lineno, "empty identifier");
      }
      if (t.cpu_request <= 0 || t.mem_request < 0) throw TraceCorrupt(lineno, "invalid resource request");
      out.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw TraceCorrupt(lineno, e.what());
    }
  }
  return out;
}

inline std::vector<TaskRequest> load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TraceCorrupt(0, "cannot open " + path.string());
  return parse_trace(in);
}

inline void save_trace(const std::vector<TaskRequest>& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << trace_to_string(trace);
}

}  // namespace lrsched
