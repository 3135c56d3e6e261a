#include <vector>

#include "torusrg/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return torusrg::run_cli(args);
}
