#include <iostream>
#include <string>
#include <vector>

#include "collider/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return collider::run_pipeline(args, std::cout, std::cerr);
}
