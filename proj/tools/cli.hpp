#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace thinfilm::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kConfigError = 2,
  kNumericalError = 3,
  kAssertionFailed = 4,
};

/// thinfilm <frame|almost-periods|cell|homogenize|verify> --config FILE
///          [--T x] [--eta x] [--out PATH] ...
/// CSV goes to --out (or stdout); the summary goes to stdout when the CSV is
/// written to a file and to stderr otherwise.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Same, with the arguments after the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace thinfilm::cli
