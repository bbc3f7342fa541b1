#pragma once

#include <iosfwd>

namespace flexsan {

/// Entry point behind the `flexsan` binary. Returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace flexsan
