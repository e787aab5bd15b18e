#include <iostream>
#include <string>
#include <vector>

#include "gaugefix/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return gaugefix::run_cli(args, std::cout, std::cerr);
}
