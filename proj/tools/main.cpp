#include <iostream>
#include <string>
#include <vector>

#include "pose_adapt/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pose_adapt::cli::run(args, std::cout, std::cerr);
}
