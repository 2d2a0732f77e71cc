#pragma once

// Command-line front end: calibrate, simulate and preprocess subcommands.
//
// Exit codes (stable):
//   0  success
//   1  solver did not converge within the iteration budget
//   2  degenerate line configuration (result still written)
//   3  parse, validation or command-line error

#include <iosfwd>
#include <span>
#include <string>

namespace plkcalib::cli {

enum ExitCode : int {
  kOk = 0,
  kNotConverged = 1,
  kDegenerate = 2,
  kInvalidInput = 3,
};

enum class LogLevel { Quiet, Info, Debug };

/// Reads PLKCALIB_LOG ("quiet", "info", "debug"); unset or unknown means info.
LogLevel log_level_from_env();

/// `args` excludes the program name.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err,
        LogLevel level = log_level_from_env());

int main(int argc, char** argv);

}  // namespace plkcalib::cli
