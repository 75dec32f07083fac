// Scores one task against two nodes under each policy and prints the
// breakdown.

#include <iostream>

#include "lrsched/scheduler.hpp"
#include "lrsched/units.hpp"

using namespace lrsched;

int main() {
  LayerCatalog catalog;
  catalog.add_layer(LayerId("sha256:debian"), 29 * kMB);
  catalog.add_layer(LayerId("sha256:python"), 48 * kMB);
  catalog.add_layer(LayerId("sha256:app"), 6 * kMB);
  catalog.add_image({"api", "2.1"}, {LayerId("sha256:debian"), LayerId("sha256:python"), LayerId("sha256:app")});

  std::vector<NodeState> nodes;
  nodes.emplace_back(NodeSpec{"edge-a", 4000, 4 * kGB, 2.5e6, 20 * kGB, 110});
  nodes.emplace_back(NodeSpec{"edge-b", 4000, 4 * kGB, 2.5e6, 20 * kGB, 110});
  nodes[1].local_layers = {LayerId("sha256:debian"), LayerId("sha256:python")};
  nodes[1].cpu_committed = 1200;
  nodes[1].mem_committed = 1 * kGB;

  const TaskRequest task{"task-1", {"api", "2.1"}, 500, 256 * kMB};
  for (const auto& cfg : {SchedulerConfig::default_scheduler(), SchedulerConfig::layer_static(), SchedulerConfig::lr_dynamic()}) {
    auto outcome = schedule(task, nodes, catalog, cfg);
    const auto& p = std::get<Placement>(outcome);
    std::cout << to_string(cfg.policy) << " -> " << p.node_id << " (download " << p.download_bytes / kMB << " MB, "
              << p.download_seconds << " s)\n";
    for (const auto& [id, b] : p.scores) {
      std::cout << "  " << id << ": layer " << b.layer_score << ", baseline " << b.baseline_score << ", omega "
                << b.omega_used << ", final " << b.final_score << '\n';
    }
  }
}
