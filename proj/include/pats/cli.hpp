#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace pats {

/// Process exit codes.
enum ExitCode : int {
    exit_ok = 0,        ///< completed, including runs that diverged
    exit_usage = 2,     ///< bad flags, run file or spec
    exit_io = 3,        ///< filesystem failure
    exit_internal = 1,
};

/// Entry point of the `pats` tool; never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "1..5", "1,3,9" or a mix such as "1..3,7".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);
std::vector<double> parse_fraction_list(const std::string& text);

} // namespace pats
