#include <random>

#include <gtest/gtest.h>

#include "instances.hpp"
#include "lrsched/scheduler.hpp"
#include "lrsched/units.hpp"
#include "oracle.hpp"

using namespace lrsched;

namespace {

NodeSpec spec(std::string id, Bytes storage = 10 * kGB, int max_containers = 10) {
  return {std::move(id), 4000, 4 * kGB, 1e7, storage, max_containers};
}

struct Cluster {
  LayerCatalog catalog;
  std::vector<NodeState> nodes;
  Cluster() {
    catalog.add_layer(LayerId("base"), 30 * kMB);
    catalog.add_layer(LayerId("app"), 70 * kMB);
    catalog.add_layer(LayerId("other"), 50 * kMB);
    catalog.add_image({"app", "1"}, {LayerId("base"), LayerId("app")});
    catalog.add_image({"other", "1"}, {LayerId("base"), LayerId("other")});
    nodes.emplace_back(spec("a"));
    nodes.emplace_back(spec("b"));
  }
};

TaskRequest task(std::string id, ImageRef image = {"app", "1"}, Millicores cpu = 500, Bytes mem = 256 * kMB) {
  return {std::move(id), std::move(image), cpu, mem};
}

}  // namespace

TEST(Filter, ChecksConstraintsInOrder) {
  Cluster c;
  NodeState tiny(spec("tiny", 99 * kMB));
  tiny.local_layers = {LayerId("base")};  // 30MB stored, 70MB more needed, 1MB short
  auto v = filter(tiny, task("t"), c.catalog);
  EXPECT_FALSE(v.feasible);
  EXPECT_EQ(v.rejected_by, Constraint::storage);

  NodeState full(spec("full", 10 * kGB, 1));
  full = commit_placement(full, task("t0"), c.catalog);
  EXPECT_EQ(filter(full, task("t"), c.catalog).rejected_by, Constraint::container_count);

  EXPECT_EQ(filter(c.nodes[0], task("t", {"app", "1"}, 5000), c.catalog).rejected_by, Constraint::cpu_fit);
  EXPECT_EQ(filter(c.nodes[0], task("t", {"app", "1"}, 100, 5 * kGB), c.catalog).rejected_by, Constraint::mem_fit);

  auto ok = filter(c.nodes[0], task("t"), c.catalog);
  EXPECT_TRUE(ok.feasible);
  EXPECT_FALSE(ok.rejected_by.has_value());
}

TEST(Schedule, LayerStaticPrefersNodeHoldingLayers) {
  Cluster c;
  c.nodes[1].local_layers = {LayerId("base"), LayerId("app")};
  auto r = schedule(task("t"), c.nodes, c.catalog, SchedulerConfig::layer_static(4));
  auto* p = std::get_if<Placement>(&r);
  ASSERT_NE(p, nullptr);
  EXPECT_EQ(p->node_id, "b");
  EXPECT_EQ(p->download_bytes, 0);
  EXPECT_EQ(p->scores.size(), 2u);
  EXPECT_DOUBLE_EQ(p->scores.at("b").layer_score, 100.0);
}

TEST(Schedule, TiesGoToLowestNodeId) {
  Cluster c;
  std::vector<NodeState> nodes{NodeState(spec("zeta")), NodeState(spec("alpha"))};
  auto r = schedule(task("t"), nodes, c.catalog, SchedulerConfig::default_scheduler());
  EXPECT_EQ(std::get<Placement>(r).node_id, "alpha");
}

TEST(Schedule, SeededRandomTieBreakIsReproducible) {
  Cluster c;
  std::vector<NodeState> nodes;
  for (int i = 0; i < 6; ++i) nodes.emplace_back(spec("n" + std::to_string(i)));
  auto cfg = SchedulerConfig::default_scheduler();
  cfg.tie_break = TieBreak::random_seeded;
  std::set<std::string> chosen;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    std::mt19937_64 r1(seed), r2(seed);
    auto a = std::get<Placement>(schedule(task("t"), nodes, c.catalog, cfg, &r1)).node_id;
    auto b = std::get<Placement>(schedule(task("t"), nodes, c.catalog, cfg, &r2)).node_id;
    EXPECT_EQ(a, b);
    chosen.insert(a);
  }
  EXPECT_GT(chosen.size(), 1u);
}

TEST(Schedule, AllNodesFullIsUnschedulable) {
  Cluster c;
  for (auto& n : c.nodes) n.cpu_committed = 4000;
  auto r = schedule(task("t"), c.nodes, c.catalog, SchedulerConfig::lr_dynamic());
  auto* u = std::get_if<Unschedulable>(&r);
  ASSERT_NE(u, nullptr);
  ASSERT_EQ(u->verdicts.size(), 2u);
  for (const auto& v : u->verdicts) EXPECT_EQ(v.rejected_by, Constraint::cpu_fit);
}

TEST(Schedule, UnknownImageThrows) {
  Cluster c;
  EXPECT_THROW(schedule(task("t", {"nope", "1"}), c.nodes, c.catalog, SchedulerConfig::lr_dynamic()), UnknownImage);
}

TEST(Schedule, DownloadSecondsUseChosenNodeBandwidth) {
  Cluster c;
  auto r = std::get<Placement>(schedule(task("t"), c.nodes, c.catalog, SchedulerConfig::default_scheduler()));
  EXPECT_EQ(r.download_bytes, 100 * kMB);
  EXPECT_DOUBLE_EQ(r.download_seconds, 10.0);
}

TEST(Schedule, ChosenNodeHasMaximalScore) {
  std::mt19937_64 rng(8);
  const SchedulerConfig configs[] = {SchedulerConfig::default_scheduler(), SchedulerConfig::layer_static(),
                                     SchedulerConfig::lr_dynamic()};
  for (int iter = 0; iter < 200; ++iter) {
    auto in = testing_support::random_instance(rng, 8, 4, 4, true);
    TaskRequest t{"t", in.images[rng() % in.images.size()], 50, 50 * kMB};
    for (const auto& cfg : configs) {
      auto r = schedule(t, in.nodes, in.catalog, cfg);
      auto* p = std::get_if<Placement>(&r);
      if (p == nullptr) continue;
      for (const auto& [id, b] : p->scores) EXPECT_GE(p->scores.at(p->node_id).final_score + 1e-9, b.final_score);
    }
  }
}

TEST(ScheduleTrace, EmptyAndSingle) {
  Cluster c;
  auto empty = schedule_trace({}, c.nodes, c.catalog, SchedulerConfig::lr_dynamic());
  EXPECT_TRUE(empty.outcomes.empty());
  EXPECT_EQ(empty.cluster.size(), 2u);
  EXPECT_TRUE(empty.cluster[0].running.empty());

  std::vector<NodeState> one{NodeState(spec("only"))};
  std::vector<TaskRequest> tasks{task("t1")};
  auto r = schedule_trace(tasks, one, c.catalog, SchedulerConfig::lr_dynamic());
  ASSERT_EQ(r.outcomes.size(), 1u);
  EXPECT_EQ(std::get<Placement>(r.outcomes[0]).node_id, "only");
  EXPECT_EQ(r.cluster[0].running.size(), 1u);
}

TEST(ScheduleTrace, UnschedulableTasksLeaveStateUntouched) {
  Cluster c;
  std::vector<NodeState> one{NodeState(spec("only"))};
  std::vector<TaskRequest> tasks{task("big", {"app", "1"}, 5000), task("ok")};
  auto r = schedule_trace(tasks, one, c.catalog, SchedulerConfig::lr_dynamic());
  EXPECT_TRUE(std::holds_alternative<Unschedulable>(r.outcomes[0]));
  EXPECT_TRUE(std::holds_alternative<Placement>(r.outcomes[1]));
  EXPECT_EQ(r.cluster[0].running.size(), 1u);
  EXPECT_EQ(std::get<Placement>(r.outcomes[1]).download_bytes, 100 * kMB);
}

TEST(ScheduleTrace, DeterministicAcrossRuns) {
  std::mt19937_64 rng(1);
  auto in = testing_support::random_instance(rng, 8, 4, 3, false);
  std::vector<TaskRequest> tasks;
  for (int i = 0; i < 20; ++i) tasks.push_back({"t" + std::to_string(i), in.images[rng() % in.images.size()], 100, kMB});
  auto cfg = SchedulerConfig::lr_dynamic();
  cfg.tie_break = TieBreak::random_seeded;
  cfg.tie_seed = 77;
  auto a = schedule_trace(tasks, in.nodes, in.catalog, cfg);
  auto b = schedule_trace(tasks, in.nodes, in.catalog, cfg);
  EXPECT_EQ(a.outcomes, b.outcomes);
}

TEST(ScheduleTrace, MatchesExhaustiveOracleOnFiveTaskTraces) {
  std::mt19937_64 rng(2024);
  for (int iter = 0; iter < 50; ++iter) {
    auto in = testing_support::random_instance(rng, 8, 4, 3, true);
    std::vector<TaskRequest> tasks;
    std::vector<oracle::Task> otasks;
    for (int i = 0; i < 5; ++i) {
      tasks.push_back({"t" + std::to_string(i), in.images[rng() % in.images.size()], 1 + std::int64_t(rng() % 1200),
                       std::int64_t(rng() % 1'500'000'000)});
      otasks.push_back(testing_support::to_oracle(tasks.back()));
    }
    auto cfg = SchedulerConfig::lr_dynamic();
    auto got = schedule_trace(tasks, in.nodes, in.catalog, cfg);
    auto want = oracle::trace(in.o_catalog, in.o_nodes, otasks, testing_support::oracle_weights(cfg), {});
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      auto* p = std::get_if<Placement>(&got.outcomes[i]);
      EXPECT_EQ(p ? p->node_id : "", want[i]) << "iteration " << iter << " task " << i;
    }
  }
}

TEST(Policy, DefaultIgnoresWeightSettings) {
  std::mt19937_64 rng(4);
  for (int iter = 0; iter < 50; ++iter) {
    auto in = testing_support::random_instance(rng, 8, 4, 3, true);
    std::vector<TaskRequest> tasks;
    for (int i = 0; i < 10; ++i) tasks.push_back({"t" + std::to_string(i), in.images[rng() % in.images.size()], 100, kMB});
    auto plain = SchedulerConfig::default_scheduler();
    auto tweaked = plain;
    tweaked.weights = WeightPolicy::fixed(50.0);
    tweaked.weights.omega_high = 9;
    EXPECT_EQ(schedule_trace(tasks, in.nodes, in.catalog, plain).outcomes,
              schedule_trace(tasks, in.nodes, in.catalog, tweaked).outcomes);
  }
}

TEST(Policy, LayerStaticPilesOntoFirstNodeWhenLayersAreShared) {
  LayerCatalog catalog;
  catalog.add_layer(LayerId("shared"), 500 * kMB);
  std::vector<ImageRef> images;
  for (int i = 0; i < 5; ++i) {
    catalog.add_layer(LayerId("top" + std::to_string(i)), 1 * kMB);
    images.push_back({"img" + std::to_string(i), "1"});
    catalog.add_image(images.back(), {LayerId("shared"), LayerId("top" + std::to_string(i))});
  }
  std::vector<NodeState> nodes;
  for (auto id : {"n1", "n2", "n3"}) nodes.emplace_back(NodeSpec{id, 1'000'000, 1'000'000 * kGB, 1e7, 1'000 * kGB, 1000});
  std::vector<TaskRequest> tasks;
  for (int i = 0; i < 30; ++i) tasks.push_back({"t" + std::to_string(i), images[std::size_t(i) % 5], 100, kMB});
  auto r = schedule_trace(tasks, nodes, catalog, SchedulerConfig::layer_static(4));
  const auto first = std::get<Placement>(r.outcomes[0]).node_id;
  for (const auto& o : r.outcomes) EXPECT_EQ(std::get<Placement>(o).node_id, first);
}

TEST(Policy, NamesRoundTrip) {
  for (auto p : {Policy::default_scheduler, Policy::layer_static, Policy::lr_dynamic}) {
    EXPECT_EQ(parse_policy(to_string(p)), p);
  }
  EXPECT_FALSE(parse_policy("bogus").has_value());
}
