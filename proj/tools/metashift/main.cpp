#include <iostream>

#include "metashift/cli/cli.hpp"

int main(int argc, char** argv) {
  return metashift::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cerr);
}
