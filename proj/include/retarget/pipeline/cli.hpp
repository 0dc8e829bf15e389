#pragma once

namespace retarget::pipeline {

// Entry point for the command-line tool. Returns the process exit code:
// 0 success, 2 config error, 3 data error, 4 numeric error.
int run_cli(int argc, char** argv);

}  // namespace retarget::pipeline
