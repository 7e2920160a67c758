#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return nsshape::cli::run(argc, argv, std::cout, std::cerr); }
