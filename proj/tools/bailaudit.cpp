#include <iostream>
#include <string>
#include <vector>

#include "bailaudit/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return bailaudit::cli::run(args, std::cout, std::cerr);
}
