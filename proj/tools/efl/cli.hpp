#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace efl::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInvalidFlags = 2,
  kExitIntegratorFailure = 3,
  kExitPrecondition = 4,
};

// Runs one invocation. args[0] is the program name. JSON documents and CSV
// (when no --out is given) go to `out`; human-readable messages to `err`.
// `threads_env` is the value of EFL_THREADS, or nullptr when unset.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const char* threads_env = nullptr);

}  // namespace efl::cli
