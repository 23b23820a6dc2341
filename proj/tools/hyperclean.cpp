#include <iostream>
#include <string>
#include <vector>

#include "hyperclean/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return hyperclean::cli::run(args, std::cout, std::cerr);
}
