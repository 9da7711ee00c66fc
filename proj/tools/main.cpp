#include <iostream>
#include <string>
#include <vector>

#include "vq2d/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return vq2d::cli::run(args, std::cout, std::cerr);
}
