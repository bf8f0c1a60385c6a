#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tailrisk::cli {

/// Run one CLI command. `args` excludes the program name. Returns 0 on
/// success, 1 on usage errors, 2 on runtime failures (after removing any
/// partially written outputs).
int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

}  // namespace tailrisk::cli
