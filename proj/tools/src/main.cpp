#include <iostream>
#include <string>
#include <vector>

#include "rimamba_cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return rimamba::cli::run(args, std::cout, std::cerr);
}
