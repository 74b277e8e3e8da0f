#include <iostream>
#include <string>
#include <vector>

#include "netsurv/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return netsurv::run_command(args, std::cout, std::cerr);
}
