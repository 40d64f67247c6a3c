// SPDX-License-Identifier: Apache-2.0

#include "circuits/cli.hpp"

int main(int argc, char** argv) {
  return circuits::run_command(std::vector<std::string>(argv + 1, argv + argc));
}
