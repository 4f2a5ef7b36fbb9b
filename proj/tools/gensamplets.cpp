#include <iostream>
#include <string>
#include <vector>

#include "gensamplets/pipeline.hpp"

int main(int argc, char **argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return gensamplets::run_cli(args, std::cout, std::cerr);
}
