#include <iostream>
#include <string>
#include <vector>

#include "madseq/cli.hpp"

int main(int argc, char** argv) {
  return madseq::run_command(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
