#include <iostream>
#include <string>
#include <vector>

#include "ctb/cli/app.hpp"

int main(int argc, char** argv) {
  return ctb::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
