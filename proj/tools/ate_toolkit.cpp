#include <iostream>

#include "atekit/cli.hpp"

int main(int argc, char** argv) { return atekit::cli::run_cli(argc, argv, std::cout, std::cerr); }
