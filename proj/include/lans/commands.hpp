#pragma once

#include "lans/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace lans {

enum ExitCode : int { kExitOk = 0, kExitAssertion = 1, kExitConfig = 2 };

const std::vector<std::string>& subcommands();

/// Runs one experiment. CSV goes to `csv`, human-readable summaries and
/// warnings to `info`. Returns the process exit code (0 ok, 1 an asserted
/// property failed, 2 configuration or precondition error).
int run_command(const std::string& subcommand, const SimConfig& cfg, std::ostream& csv,
                std::ostream& info);

/// Formats with 17 significant digits.
std::string format_real(double value);

} // namespace lans
