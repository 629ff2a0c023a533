#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace divkernel::cli {

enum ExitCode : int {
  kOk = 0,
  kUnknownCommand = 2,
  kInvalidInput = 3,
  kRuntimeFailure = 4,
};

/// args[0] is the command name (no program name). Summary lines go to `out`,
/// logs and the single-line error to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace divkernel::cli
