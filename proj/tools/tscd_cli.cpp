#include <iostream>
#include <string>
#include <vector>

#include "tscd/cli.hpp"

int main(int argc, char** argv) {
  return tscd::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
