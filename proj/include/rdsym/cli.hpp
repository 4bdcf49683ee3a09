#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rdsym::cli {

/// Runs one command; args exclude the program name. Exit status: 0 when every
/// check passes, 1 when a check fails (report still written), 2 on usage or
/// configuration errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rdsym::cli
