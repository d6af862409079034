#include <iostream>

#include "flamegan/cli.hpp"

int main(int argc, char** argv) { return flamegan::run_cli(argc, argv, std::cout, std::cerr); }
