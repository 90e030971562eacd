#pragma once

#include <iosfwd>

namespace modflight {

/// Entry point of the `modflight` tool. Returns 0 on success, 1 when a scenario
/// fails, 2 on usage errors (written to `err`).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace modflight
