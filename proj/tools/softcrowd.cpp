// Copyright 2026 The softcrowd Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "softcrowd/cli.hpp"

int main(int argc, char** argv) {
  return softcrowd::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
