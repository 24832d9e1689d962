#pragma once

// Subcommand front end shared by the tweetembed binary and the in-process
// CLI tests.

#include <iosfwd>
#include <string>
#include <vector>

namespace tweetembed::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // unexpected internal error
inline constexpr int kExitInputError = 2;
inline constexpr int kExitDiverged = 3;

inline constexpr const char* kToolVersion = "0.1.0";

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tweetembed::app
