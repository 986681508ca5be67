#include <iostream>
#include <string>
#include <vector>

#include "memen/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return memen::run_cli(args, std::cout, std::cerr);
}
