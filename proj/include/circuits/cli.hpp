// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace circuits {

/// Runs one `circuits` subcommand. `args` excludes the program name.
/// Returns 0 on success, 2 on configuration or usage errors, 3 on numeric
/// failures and 1 on anything else.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_command(const std::vector<std::string>& args);

}  // namespace circuits
