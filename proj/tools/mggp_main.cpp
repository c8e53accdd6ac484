#include "mggp/cli.hpp"

int main(int argc, char** argv) { return mggp::cli::run_cli(argc, argv); }
