#include <iostream>
#include <string>
#include <vector>

#include "a2l/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return a2l::cli::run(args, std::cout, std::cerr);
}
