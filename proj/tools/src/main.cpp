#include <iostream>

#include "noma/cli.hpp"

int main(int argc, char** argv) { return noma::cli::run(argc, argv, std::cout, std::cerr); }
