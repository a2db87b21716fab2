#include <iostream>

#include "pulse/cli.hpp"

int main(int argc, char** argv) { return pulse::cli::run(argc, argv, std::cout, std::cerr); }
