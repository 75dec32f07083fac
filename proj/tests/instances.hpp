#pragma once

// Random small instances mirrored into both the library model and the
// oracle's plain representation.

#include <random>
#include <string>
#include <vector>

#include "lrsched/model.hpp"
#include "lrsched/scheduler.hpp"
#include "lrsched/scoring.hpp"
#include "oracle.hpp"

namespace testing_support {

struct Instance {
  lrsched::LayerCatalog catalog;
  oracle::Catalog o_catalog;
  std::vector<lrsched::ImageRef> images;
  std::vector<lrsched::NodeState> nodes;
  std::vector<oracle::Node> o_nodes;
};

inline lrsched::ImageRef image_ref(std::size_t i) { return {"img" + std::to_string(i), "v1"}; }

/// Catalog of 1..max_layers layers (sizes 1..80 MB) and 1..max_images
/// images over them. Some images may share every layer with another.
inline void random_catalog(std::mt19937_64& rng, Instance& in, int max_layers, int max_images) {
  std::uniform_int_distribution<int> n_layers(1, max_layers);
  std::uniform_int_distribution<int> n_images(1, max_images);
  std::uniform_int_distribution<std::int64_t> size(1, 80);
  const int L = n_layers(rng);
  std::vector<std::string> digests;
  for (int l = 0; l < L; ++l) {
    std::string d = "sha256:layer" + std::to_string(l);
    // Sizes in whole MB plus an odd byte count so ratios are not all round.
    std::int64_t bytes = size(rng) * 1'000'000 + std::int64_t(rng() % 1000);
    in.catalog.add_layer(lrsched::LayerId(d), bytes);
    in.o_catalog.layer_size[d] = bytes;
    digests.push_back(d);
  }
  const int I = n_images(rng);
  for (int i = 0; i < I; ++i) {
    std::vector<lrsched::LayerId> ls;
    std::vector<std::string> os;
    for (int l = 0; l < L; ++l) {
      if (rng() % 2 == 0) {
        ls.emplace_back(digests[l]);
        os.push_back(digests[l]);
      }
    }
    if (ls.empty()) {
      ls.emplace_back(digests[0]);
      os.push_back(digests[0]);
    }
    auto ref = image_ref(std::size_t(i));
    in.catalog.add_image(ref, ls);
    in.o_catalog.images[ref.str()] = os;
    in.images.push_back(ref);
  }
}

/// Node with random capacities; when `loaded`, random cached layers/images
/// and committed resources consistent with the node's capacity.
inline void add_random_node(std::mt19937_64& rng, Instance& in, const std::string& id, bool loaded) {
  lrsched::NodeSpec spec;
  spec.id = id;
  spec.cpu_capacity = std::int64_t(1000 * (1 + rng() % 4));
  spec.mem_capacity = std::int64_t((1 + rng() % 4) * 1'000'000'000LL);
  spec.bandwidth = double(1 + rng() % 10) * 1e6;
  spec.storage_capacity = std::int64_t((100 + rng() % 700) * 1'000'000LL);
  spec.max_containers = int(2 + rng() % 8);
  lrsched::NodeState n(spec);
  oracle::Node o;
  o.id = id;
  o.cpu_cap = spec.cpu_capacity;
  o.mem_cap = spec.mem_capacity;
  o.storage = spec.storage_capacity;
  o.max_containers = spec.max_containers;
  o.bandwidth = spec.bandwidth;
  if (loaded) {
    for (const auto& [d, size] : in.o_catalog.layer_size) {
      if (rng() % 3 == 0 && lrsched::stored_bytes(n, in.catalog) + size <= spec.storage_capacity) {
        n.local_layers.insert(lrsched::LayerId(d));
        o.layers.insert(d);
      }
    }
    for (const auto& img : in.images) {
      bool all = true;
      for (const auto& l : in.catalog.image_layers(img)) all = all && n.local_layers.contains(l);
      if (all && rng() % 2 == 0) {
        n.local_images.insert(img);
        o.images.insert(img.str());
      }
    }
    const int k = int(rng() % std::uint64_t(spec.max_containers));
    for (int c = 0; c < k; ++c) {
      std::int64_t cpu = 1 + std::int64_t(rng() % 900);
      std::int64_t mem = std::int64_t(rng() % 700'000'000);
      if (n.cpu_committed + cpu > spec.cpu_capacity || n.mem_committed + mem > spec.mem_capacity) break;
      n.running.push_back({"pre-" + std::to_string(c), in.images[0], cpu, mem});
      n.cpu_committed += cpu;
      n.mem_committed += mem;
    }
    o.cpu = n.cpu_committed;
    o.mem = n.mem_committed;
    o.containers = int(n.running.size());
  }
  in.nodes.push_back(std::move(n));
  in.o_nodes.push_back(std::move(o));
}

inline Instance random_instance(std::mt19937_64& rng, int max_layers, int max_images, int n_nodes, bool loaded) {
  Instance in;
  random_catalog(rng, in, max_layers, max_images);
  for (int i = 0; i < n_nodes; ++i) add_random_node(rng, in, "node-" + std::string(1, char('a' + i)), loaded);
  return in;
}

inline oracle::Task to_oracle(const lrsched::TaskRequest& t) {
  return {t.task_id, t.image.str(), t.cpu_request, t.mem_request};
}

inline oracle::Weights to_oracle(const lrsched::WeightPolicy& w) {
  oracle::Weights o;
  o.dynamic = w.mode == lrsched::WeightMode::dynamic;
  o.omega = w.omega_static;
  o.omega_high = w.omega_high;
  o.omega_low = w.omega_low;
  o.h_size = w.h_size;
  o.h_cpu = w.h_cpu;
  o.h_std = w.h_std;
  return o;
}

/// Oracle weights for a scheduler policy, derived from the policy's stated
/// meaning rather than from SchedulerConfig::effective_weights().
inline oracle::Weights oracle_weights(const lrsched::SchedulerConfig& c) {
  oracle::Weights o = to_oracle(c.weights);
  switch (c.policy) {
    case lrsched::Policy::default_scheduler:
      o.dynamic = false;
      o.omega = 0;
      break;
    case lrsched::Policy::layer_static:
      o.dynamic = false;
      break;
    case lrsched::Policy::lr_dynamic:
      o.dynamic = true;
      break;
  }
  return o;
}

}  // namespace testing_support
