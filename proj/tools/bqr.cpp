#include "bqr/cli_io.hpp"

int main(int argc, char** argv) { return bqr::run_cli(argc, argv); }
