#include <iostream>
#include <string>
#include <vector>

#include "grushin/cli/run.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return grushin::cli::main_entry(args, std::cout, std::cerr);
}
