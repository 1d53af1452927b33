#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "a2l/errors.hpp"

namespace a2l::cli {

/// Stable process exit codes.
enum ExitCode : int {
  kOk = 0,
  kGeneric = 1,
  kUsage = 2,
  kData = 3,
  kBackend = 4,
  kAnnotation = 5,
  kEpisodeAborted = 6,
  kNoData = 7,
};

int exit_code_for(ErrorKind kind);

/// Runs one invocation (`args[0]` is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace a2l::cli
