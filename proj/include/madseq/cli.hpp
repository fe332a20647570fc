#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace madseq {

enum ExitCode { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumerical = 3 };

/// Runs one `madseq` subcommand; args exclude the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace madseq
