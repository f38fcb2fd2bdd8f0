#pragma once

#include <iosfwd>

namespace qmrdx {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitCheck = 3;

/// Entry point of the `qmrdx` tool. Results go to `out` (or --output),
/// logs and errors to `err`; `in` feeds the interactive diagnose loop.
int dispatch(int argc, const char* const* argv, std::istream& in, std::ostream& out,
             std::ostream& err);

}  // namespace qmrdx
