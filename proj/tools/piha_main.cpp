#include <iostream>
#include <string>
#include <vector>

#include "piha/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return piha::cli::run_command(args, std::cout, std::cerr);
}
