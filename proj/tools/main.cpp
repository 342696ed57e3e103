#include <iostream>

#include "mcgraph/cli.hpp"

int main(int argc, char** argv) { return mcgraph::run_cli(argc, argv, std::cout, std::cerr); }
