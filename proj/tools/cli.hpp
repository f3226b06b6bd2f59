#pragma once

#include "hcodec/error.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace hcodec::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitInput = 2,
    kExitMismatch = 3,
    kExitInvariant = 4,
};

int exit_code_for(Errc code);

// Entry point shared by the executable and the tests. Results go to `out`,
// diagnostics to the spdlog default logger.
int run(int argc, const char * const * argv, std::ostream & out);
int run(const std::vector<std::string> & args, std::ostream & out);

// Comma-separated values with double-quote escaping.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string csv_field(std::string_view value);

} // namespace hcodec::cli
