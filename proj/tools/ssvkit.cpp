#include <iostream>
#include <string>
#include <vector>

#include "ssv/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return ssv::cli::run(args, std::cout, std::cerr);
}
