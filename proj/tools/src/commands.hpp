#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace renderworld::cli {

/// Runs the renderworld command line. `args` excludes the program name.
/// Returns the process exit code: 0 ok, 2 config, 3 backend, 4 data.
/// Errors are reported on `err` as one JSON object per line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace renderworld::cli
