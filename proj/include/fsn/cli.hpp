#ifndef FSN_CLI_HPP
#define FSN_CLI_HPP

#include <string_view>

namespace fsn {

inline constexpr std::string_view kVersion = "0.1.0";

// Entry point of the fsn command-line tool. Returns the process exit code:
// 0 success, 1 runtime failure, 2 usage error.
int run_cli(int argc, char** argv);

}  // namespace fsn

#endif  // FSN_CLI_HPP
