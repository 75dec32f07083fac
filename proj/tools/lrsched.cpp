#include <csignal>
#include <iostream>
#include <string>
#include <vector>

#include "lrsched/cli.hpp"

int main(int argc, char** argv) {
  std::signal(SIGINT, [](int) { lrsched::g_interrupted = true; });
  std::signal(SIGTERM, [](int) { lrsched::g_interrupted = true; });
  std::vector<std::string> args(argv + 1, argv + argc);
  return lrsched::run_cli(args, std::cout, std::cerr);
}
