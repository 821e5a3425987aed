// Copyright 2026 The softcrowd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace softcrowd::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Exit codes: 0 ok, 1 runtime failure, 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// `start:stop:step` (inclusive) or a comma list.
std::vector<double> parse_grid(const std::string& spec);

}  // namespace softcrowd::cli
