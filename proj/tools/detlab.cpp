#include <iostream>
#include <string>
#include <vector>

#include "detlab/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return detlab::cli::run(args, std::cout, std::cerr);
}
