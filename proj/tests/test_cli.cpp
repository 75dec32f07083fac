#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "lrsched/cli.hpp"

using namespace lrsched;
using testing_support::slurp;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string scenario(const char* name) { return (testing_support::source_dir() / "scenarios" / name).string(); }

// A refused connection fails fast on loopback port 1.
constexpr const char* kDeadRegistry = "http://127.0.0.1:1";

}  // namespace

TEST(Cli, ValidateBundledScenario) {
  auto r = cli({"validate", scenario("edge_testbed.json")});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("ok:"), std::string::npos);
}

TEST(Cli, BadScenarioIsConfigError) {
  auto dir = testing_support::scratch_dir("cli-bad");
  {
    std::ofstream(dir / "s.json") << R"({"nodes": [], "workload": {"count": 1}, "catalog": {"cache": "none.json"}})";
  }
  auto r = cli({"validate", (dir / "s.json").string()});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("error: scenario"), std::string::npos);
  EXPECT_EQ(cli({"validate", (dir / "missing.json").string()}).code, kExitConfig);
  std::filesystem::remove_all(dir);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, kExitConfig);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitConfig);
  EXPECT_EQ(cli({"sweep", scenario("edge_testbed.json"), "--param", "colour"}).code, kExitConfig);
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
}

TEST(Cli, SimulateWritesJsonAndCsv) {
  auto dir = testing_support::scratch_dir("cli-sim");
  auto r = cli({"simulate", scenario("edge_testbed.json"), "--scheduler", "lr_dynamic", "--seed", "3", "--out", dir.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  auto json = nlohmann::json::parse(slurp(dir / "simulate-lr_dynamic-seed3.json"));
  EXPECT_EQ(json.at("seed"), 3);
  auto csv = slurp(dir / "simulate-lr_dynamic-seed3.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kStepsCsvHeader);
  EXPECT_EQ(cli({"simulate", scenario("edge_testbed.json"), "--scheduler", "nope", "--out", dir.string()}).code, kExitConfig);
  std::filesystem::remove_all(dir);
}

TEST(Cli, CompareAndSweepOutputs) {
  auto dir = testing_support::scratch_dir("cli-cmp");
  auto r = cli({"compare", scenario("edge_testbed.json"), "--seed", "1", "--out", dir.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  auto cmp = nlohmann::json::parse(slurp(dir / "compare.json"));
  EXPECT_EQ(cmp.at("per_seed").size(), 1u);
  EXPECT_TRUE(std::filesystem::exists(dir / "compare.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "compare_steps.csv"));

  r = cli({"sweep", scenario("edge_testbed.json"), "--param", "bandwidth", "--seed", "1", "--out", dir.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  auto sweep = nlohmann::json::parse(slurp(dir / "sweep-bandwidth.json"));
  EXPECT_EQ(sweep.at("points").size(), 3u);
  r = cli({"sweep", scenario("edge_testbed.json"), "--param", "nodes", "--seed", "1", "--out", dir.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::filesystem::remove_all(dir);
}

TEST(Cli, OutputsAreByteIdenticalAcrossRuns) {
  auto a = testing_support::scratch_dir("cli-det-a");
  auto b = testing_support::scratch_dir("cli-det-b");
  for (const auto& dir : {a, b}) {
    ASSERT_EQ(cli({"compare", scenario("storage_tight.json"), "--jobs", dir == a ? "1" : "4", "--out", dir.string()}).code,
              kExitOk);
  }
  for (auto name : {"compare.json", "compare.csv", "compare_steps.csv"}) EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
}

TEST(Cli, FetchRegistryWritesGoldenCache) {
  FakeRegistry reg;
  testing_support::load_fixture_registry(reg);
  FakeRegistryServer server(reg);
  auto dir = testing_support::scratch_dir("cli-fetch");
  auto r = cli({"fetch-registry", "--registry", server.base_url(), "--out", (dir / "cache.json").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(slurp(dir / "cache.json"), slurp(testing_support::test_data() / "golden" / "cache.json"));

  reg.fail_path("/v2/redis/manifests/7", 404);
  r = cli({"fetch-registry", "--registry", server.base_url(), "--out", (dir / "cache.json").string()});
  EXPECT_EQ(r.code, kExitPartial);
  std::filesystem::remove_all(dir);
}

TEST(Cli, FetchRegistryUnreachable) {
  auto dir = testing_support::scratch_dir("cli-dead");
  auto cache = (dir / "cache.json").string();
  EXPECT_EQ(cli({"fetch-registry", "--registry", kDeadRegistry, "--timeout", "1", "--out", cache}).code, kExitConfig);
  EXPECT_FALSE(std::filesystem::exists(cache));

  std::filesystem::copy_file(testing_support::test_data() / "golden" / "cache.json", cache);
  auto r = cli({"fetch-registry", "--registry", kDeadRegistry, "--timeout", "1", "--out", cache});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  EXPECT_EQ(slurp(cache), slurp(testing_support::test_data() / "golden" / "cache.json"));
  std::filesystem::remove_all(dir);
}

TEST(Cli, FetchRegistryWatchModeStopsAfterMaxPolls) {
  FakeRegistry reg;
  testing_support::load_fixture_registry(reg);
  FakeRegistryServer server(reg);
  auto dir = testing_support::scratch_dir("cli-watch");
  auto r = cli({"fetch-registry", "--registry", server.base_url(), "--out", (dir / "cache.json").string(), "--poll", "1",
                "--max-polls", "2"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  std::size_t wrote = 0;
  for (auto pos = r.out.find("wrote"); pos != std::string::npos; pos = r.out.find("wrote", pos + 1)) ++wrote;
  EXPECT_EQ(wrote, 2u);
  std::filesystem::remove_all(dir);
}

TEST(Cli, ScenarioRegistryUrlFromEnvironment) {
  FakeRegistry reg;
  testing_support::load_fixture_registry(reg);
  FakeRegistryServer server(reg);
  auto dir = testing_support::scratch_dir("cli-env");
  {
    std::ofstream(dir / "s.json") << R"({
      "registry": {"url": "http://127.0.0.1:1", "cache": "cache.json"},
      "nodes": [{"id": "n1", "cpu": 4, "memory": "8GB", "storage": "10GB", "bandwidth": "10MB/s"}],
      "workload": {"count": 5}
    })";
  }
  ::setenv(kEnvRegistryUrl, server.base_url().c_str(), 1);
  auto r = cli({"validate", (dir / "s.json").string()});
  ::unsetenv(kEnvRegistryUrl);
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("images 3"), std::string::npos);
  std::filesystem::remove_all(dir);
}
