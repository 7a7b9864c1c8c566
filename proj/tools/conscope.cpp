#include <iostream>

#include "conscope/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return conscope::cli::run(args, std::cout, std::cerr);
}
