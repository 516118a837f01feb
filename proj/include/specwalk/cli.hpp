#pragma once

namespace specwalk {

// Exit codes: 0 success, 1 usage, 2 data error, 3 oracle/protocol error,
// 4 query budget exhausted.
int run_cli(int argc, char** argv);

}  // namespace specwalk
