#pragma once

#include <ostream>

namespace skillforge {

// Exit codes: 0 success, 1 runtime failure, 2 usage or parse error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace skillforge
