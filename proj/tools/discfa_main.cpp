#include <iostream>
#include <string>
#include <vector>

#include "discfa/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return discfa::cli::main_impl(args, std::cout, std::cerr);
}
