// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "tarfas/cli.hpp"

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  return tarfas::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
