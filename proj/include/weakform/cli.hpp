#pragma once

namespace weakform {

// Entry point for the command-line tool. Returns the process exit code:
// 0 success, 2 configuration error, 3 numerical failure, 4 I/O failure.
int run_cli(int argc, const char* const* argv);

}  // namespace weakform
