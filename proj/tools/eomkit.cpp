#include <iostream>

#include "eomkit/cli.hpp"

int main(int argc, char** argv) { return eomkit::run_cli(argc, argv, std::cout, std::cerr); }
