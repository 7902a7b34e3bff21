#pragma once

namespace wdht::cli {

// Entry point shared by the wdht binary and the test suite.
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric
// failure.
int run(int argc, const char* const* argv);

}  // namespace wdht::cli
