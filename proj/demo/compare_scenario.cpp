// Runs every scheduler of a scenario file on its first seed and prints the
// totals. Usage: compare_scenario [scenario.json]

#include <iostream>

#include "lrsched/report.hpp"
#include "lrsched/scenario.hpp"

int main(int argc, char** argv) {
  const std::filesystem::path path = argc > 1 ? argv[1] : LRSCHED_DEMO_SCENARIO;
  try {
    auto file = lrsched::load_scenario_file(path);
    std::vector<lrsched::Scenario> runs;
    for (const auto& entry : file.schedulers) runs.push_back(file.scenario(entry, file.seeds.front()));
    auto report = lrsched::compare(runs);
    std::cout << path.filename().string() << ", seed " << report.seed << '\n';
    std::cout << lrsched::summary_table(lrsched::ensemble({report}));
  } catch (const lrsched::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
