#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fragmentor::cli {

inline constexpr const char* kVersion = "1.0.0";

/// Runs the `fragmentor` command line. Returns 0 on success, 1 on invalid
/// input and 2 on an internal consistency failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fragmentor::cli
