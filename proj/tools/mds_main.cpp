// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#include <string>
#include <vector>

#include "mds/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mds::run_cli(args);
}
