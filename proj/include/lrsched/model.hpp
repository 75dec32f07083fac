#pragma once

// Domain model: layers, images, nodes and tasks, plus the set algebra the
// scoring and scheduling code is built on.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lrsched/errors.hpp"
#include "lrsched/units.hpp"

namespace lrsched {

/// Content digest of a layer, e.g. "sha256:4f4fb7...".
class LayerId {
 public:
  LayerId() = default;
  explicit LayerId(std::string digest) : digest_(std::move(digest)) {
    if (digest_.empty()) throw InvalidModel("layer id must not be empty");
  }
  const std::string& digest() const noexcept { return digest_; }
  auto operator<=>(const LayerId&) const = default;

 private:
  std::string digest_;
};

struct ImageRef {
  std::string name;
  std::string tag;

  auto operator<=>(const ImageRef&) const = default;

  std::string str() const { return name + ":" + tag; }

  /// Parses "name:tag". The tag separator is the last ':' after the last
  /// '/', so "host:5000/redis:7" parses as {"host:5000/redis", "7"}. A
  /// missing tag means "latest".
  static ImageRef parse(std::string_view text) {
    auto slash = text.rfind('/');
    auto colon = text.rfind(':');
    ImageRef ref;
    if (colon != std::string_view::npos && (slash == std::string_view::npos || colon > slash)) {
      ref.name = std::string(text.substr(0, colon));
      ref.tag = std::string(text.substr(colon + 1));
    } else {
      ref.name = std::string(text);
      ref.tag = "latest";
    }
    if (ref.name.empty() || ref.tag.empty()) {
      throw InvalidModel("malformed image reference '" + std::string(text) + "'");
    }
    return ref;
  }
};

/// The universe of layers and the ordered layer list of every image.
class LayerCatalog {
 public:
  void add_layer(const LayerId& id, Bytes size) {
    if (size <= 0) throw InvalidModel("layer " + id.digest() + " must have a positive size");
    auto [it, inserted] = layers_.emplace(id, size);
    if (!inserted && it->second != size) {
      throw InvalidModel("layer " + id.digest() + " re-added with a different size");
    }
  }

  void add_image(const ImageRef& image, std::vector<LayerId> layers) {
    if (image.name.empty() || image.tag.empty()) throw InvalidModel("image name and tag must be non-empty");
    std::set<LayerId> seen;
    for (const auto& l : layers) {
      if (!layers_.contains(l)) {
        throw InvalidModel("image " + image.str() + " references unknown layer " + l.digest());
      }
      if (!seen.insert(l).second) {
        throw InvalidModel("image " + image.str() + " lists layer " + l.digest() + " twice");
      }
    }
    images_[image] = std::move(layers);
  }

  bool has_image(const ImageRef& image) const { return images_.contains(image); }
  bool has_layer(const LayerId& id) const { return layers_.contains(id); }

  const std::vector<LayerId>& image_layers(const ImageRef& image) const {
    auto it = images_.find(image);
    if (it == images_.end()) throw UnknownImage(image.str());
    return it->second;
  }

  Bytes layer_size(const LayerId& id) const {
    auto it = layers_.find(id);
    if (it == layers_.end()) throw InvalidModel("unknown layer " + id.digest());
    return it->second;
  }

  Bytes image_size(const ImageRef& image) const {
    Bytes total = 0;
    for (const auto& l : image_layers(image)) total += layer_size(l);
    return total;
  }

  std::vector<ImageRef> images() const {
    std::vector<ImageRef> out;
    out.reserve(images_.size());
    for (const auto& [ref, _] : images_) out.push_back(ref);
    return out;
  }

  const std::map<LayerId, Bytes>& layers() const noexcept { return layers_; }
  std::size_t image_count() const noexcept { return images_.size(); }

  /// Image layers with their sizes, manifest order preserved.
  std::vector<std::pair<LayerId, Bytes>> layers_of(const ImageRef& image) const {
    std::vector<std::pair<LayerId, Bytes>> out;
    for (const auto& l : image_layers(image)) out.emplace_back(l, layer_size(l));
    return out;
  }

 private:
  std::map<LayerId, Bytes> layers_;
  std::map<ImageRef, std::vector<LayerId>> images_;
};

inline std::vector<std::pair<LayerId, Bytes>> layers_of(const LayerCatalog& catalog, const ImageRef& image) {
  return catalog.layers_of(image);
}

struct NodeSpec {
  std::string id;
  Millicores cpu_capacity = 0;
  Bytes mem_capacity = 0;
  double bandwidth = 0;  // bytes per second
  Bytes storage_capacity = 0;
  int max_containers = 1;

  void validate() const {
    if (id.empty()) throw InvalidModel("node id must not be empty");
    if (cpu_capacity <= 0 || mem_capacity <= 0 || !(bandwidth > 0) || storage_capacity <= 0) {
      throw InvalidModel("node " + id + ": all capacities must be positive");
    }
    if (max_containers < 1) throw InvalidModel("node " + id + ": max_containers must be >= 1");
  }
};

struct TaskRequest {
  std::string task_id;
  ImageRef image;
  Millicores cpu_request = 0;
  Bytes mem_request = 0;

  bool operator==(const TaskRequest&) const = default;
};

struct PlacedContainer {
  std::string task_id;
  ImageRef image;
  Millicores cpu_request = 0;
  Bytes mem_request = 0;

  bool operator==(const PlacedContainer&) const = default;
};

struct NodeState {
  NodeSpec spec;
  std::set<LayerId> local_layers;
  std::set<ImageRef> local_images;
  std::vector<PlacedContainer> running;
  Millicores cpu_committed = 0;
  Bytes mem_committed = 0;

  explicit NodeState(NodeSpec s) : spec(std::move(s)) { spec.validate(); }
};

/// Node constraints in the order the filter checks them.
enum class Constraint { storage, container_count, cpu_fit, mem_fit };

inline std::string_view to_string(Constraint c) {
  switch (c) {
    case Constraint::storage: return "storage";
    case Constraint::container_count: return "container_count";
    case Constraint::cpu_fit: return "cpu_fit";
    case Constraint::mem_fit: return "mem_fit";
  }
  return "unknown";
}

/// L \ L_n(t): requested layers the node does not hold. Duplicates collapse.
inline std::set<LayerId> missing_layers(const NodeState& node, std::span<const LayerId> layers) {
  std::set<LayerId> out;
  for (const auto& l : layers) {
    if (!node.local_layers.contains(l)) out.insert(l);
  }
  return out;
}

/// Bytes currently occupied by the node's layers.
inline Bytes stored_bytes(const NodeState& node, const LayerCatalog& catalog) {
  Bytes total = 0;
  for (const auto& l : node.local_layers) total += catalog.layer_size(l);
  return total;
}

inline Bytes missing_bytes(const NodeState& node, const ImageRef& image, const LayerCatalog& catalog) {
  Bytes total = 0;
  for (const auto& l : missing_layers(node, catalog.image_layers(image))) total += catalog.layer_size(l);
  return total;
}

/// First constraint the placement of `task` on `node` would violate, or
/// nullopt when it fits.
inline std::optional<Constraint> first_violation(const NodeState& node, const TaskRequest& task,
                                                 const LayerCatalog& catalog) {
  if (missing_bytes(node, task.image, catalog) + stored_bytes(node, catalog) > node.spec.storage_capacity) {
    return Constraint::storage;
  }
  if (static_cast<int>(node.running.size()) >= node.spec.max_containers) return Constraint::container_count;
  if (node.cpu_committed + task.cpu_request > node.spec.cpu_capacity) return Constraint::cpu_fit;
  if (node.mem_committed + task.mem_request > node.spec.mem_capacity) return Constraint::mem_fit;
  return std::nullopt;
}

inline NodeState commit_placement(NodeState node, const TaskRequest& task, const LayerCatalog& catalog) {
  if (task.cpu_request <= 0) throw InvalidModel("task " + task.task_id + ": cpu_request must be positive");
  if (task.mem_request < 0) throw InvalidModel("task " + task.task_id + ": mem_request must be non-negative");
  if (auto violated = first_violation(node, task, catalog)) {
    throw CapacityViolation(std::string(to_string(*violated)));
  }
  const auto& layers = catalog.image_layers(task.image);
  node.local_layers.insert(layers.begin(), layers.end());
  node.local_images.insert(task.image);
  node.running.push_back({task.task_id, task.image, task.cpu_request, task.mem_request});
  node.cpu_committed += task.cpu_request;
  node.mem_committed += task.mem_request;
  return node;
}

/// Places an image's layers on a node before any scheduling happens. Counts
/// against storage like any download.
inline NodeState preload_image(NodeState node, const ImageRef& image, const LayerCatalog& catalog) {
  if (missing_bytes(node, image, catalog) + stored_bytes(node, catalog) > node.spec.storage_capacity) {
    throw CapacityViolation("storage");
  }
  const auto& layers = catalog.image_layers(image);
  node.local_layers.insert(layers.begin(), layers.end());
  node.local_images.insert(image);
  return node;
}

inline NodeState preload_layer(NodeState node, const LayerId& layer, const LayerCatalog& catalog) {
  if (node.local_layers.contains(layer)) return node;
  if (catalog.layer_size(layer) + stored_bytes(node, catalog) > node.spec.storage_capacity) {
    throw CapacityViolation("storage");
  }
  node.local_layers.insert(layer);
  return node;
}

/// Describes the first broken NodeState invariant, or nullopt.
inline std::optional<std::string> invariant_violation(const NodeState& node, const LayerCatalog& catalog) {
  if (node.cpu_committed > node.spec.cpu_capacity) return "cpu_committed exceeds capacity";
  if (node.mem_committed > node.spec.mem_capacity) return "mem_committed exceeds capacity";
  if (stored_bytes(node, catalog) > node.spec.storage_capacity) return "stored layers exceed storage";
  if (static_cast<int>(node.running.size()) > node.spec.max_containers) return "too many containers";
  for (const auto& image : node.local_images) {
    for (const auto& l : catalog.image_layers(image)) {
      if (!node.local_layers.contains(l)) return "image " + image.str() + " is missing layer " + l.digest();
    }
  }
  Millicores cpu = 0;
  Bytes mem = 0;
  for (const auto& c : node.running) {
    cpu += c.cpu_request;
    mem += c.mem_request;
  }
  if (cpu != node.cpu_committed) return "cpu_committed does not match running containers";
  if (mem != node.mem_committed) return "mem_committed does not match running containers";
  return std::nullopt;
}

}  // namespace lrsched
