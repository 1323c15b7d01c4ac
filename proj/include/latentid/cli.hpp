#pragma once

// Command-line front end. Exit codes: 0 certified / recovered, 1 not
// certified or a recovery precondition failed, 2 usage or input error.

#include <iosfwd>
#include <span>
#include <string>

#include "latentid/error.hpp"

namespace latentid::cli {

/// args excludes the program name.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

/// 1 for honest negative outcomes (rank or spectral preconditions), 2 for
/// malformed input.
int exit_code_for(ErrorCode code);

}  // namespace latentid::cli
