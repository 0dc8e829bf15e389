#include "retarget/pipeline/cli.hpp"

int main(int argc, char** argv) { return retarget::pipeline::run_cli(argc, argv); }
