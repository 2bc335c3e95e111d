#include <iostream>
#include <string>
#include <vector>

#include "twistlab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return twistlab::cli::run(args, std::cout, std::cerr);
}
