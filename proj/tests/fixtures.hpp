#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "lrsched/fake_registry.hpp"

namespace testing_support {

inline std::filesystem::path test_data() { return LRSCHED_TEST_DATA; }
inline std::filesystem::path source_dir() { return LRSCHED_SOURCE_DIR; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// The three-image registry described by golden/fixture_registry.json.
inline void load_fixture_registry(lrsched::FakeRegistry& registry) {
  auto j = nlohmann::json::parse(slurp(test_data() / "golden" / "fixture_registry.json"));
  for (const auto& img : j.at("images")) {
    lrsched::FakeImage f;
    f.name = img.at("name");
    f.tag = img.at("tag");
    f.config_digest = img.at("config");
    f.as_manifest_list = img.value("manifest_list", false);
    for (const auto& l : img.at("layers")) f.layers.push_back({l.at("size").get<std::int64_t>(), l.at("digest")});
    registry.add_image(std::move(f));
  }
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("lrsched-test-" + name + "-" + std::to_string(std::random_device{}()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_support
