#include <iostream>

#include "divkernel_cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return divkernel::cli::dispatch(args, std::cout, std::cerr);
}
