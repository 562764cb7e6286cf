#include <iostream>

#include "sttn_cli/cli.hpp"

int main(int argc, char** argv) { return sttn::cli::run(argc, argv, std::cout, std::cerr); }
