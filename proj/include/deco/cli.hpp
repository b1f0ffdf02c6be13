// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace deco {

/// Runs the decotk command line. `args` excludes the program name. Returns the
/// process exit code: 0 success, 1 runtime error, 2 usage or config error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace deco
