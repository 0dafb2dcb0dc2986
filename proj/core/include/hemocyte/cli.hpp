#pragma once

#include <string>
#include <vector>

namespace hemocyte {

// The whole command-line surface, callable in-process so tests can drive it
// without spawning binaries. `args` excludes the program name.
// Exit codes: 0 success, 1 pipeline error, 2 usage error, 3 config error.
int run_command(const std::vector<std::string>& args);

// argv[0] is the program name, as in main().
int run_command(int argc, const char* const* argv);

}  // namespace hemocyte
