#pragma once

#include <iosfwd>

namespace agrpose::cli {

/// Entry point of the `agrpose` binary. Returns the process exit code:
/// 0 ok, 2 config error, 3 data error, 4 numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace agrpose::cli
