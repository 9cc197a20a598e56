#include <string>
#include <vector>

#include "symkernel/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return symkernel::run_cli(args);
}
