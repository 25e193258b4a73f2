#pragma once

namespace mcdc {

// Full command-line front end (train / eval / analyze / interpolate).
// Returns the process exit code: 0 ok, 2 config error, 3 data error,
// 1 runtime failure.
int run_cli(int argc, const char* const* argv);

} // namespace mcdc
