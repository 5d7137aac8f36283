#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dpdd {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit codes: 0 success, 2 usage or input error, 3 simulation divergence, 4 numerical degeneracy.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace dpdd
