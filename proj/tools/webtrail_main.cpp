#include "webtrail/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return webtrail::cli::run(argc, argv, std::cout, std::cerr);
}
