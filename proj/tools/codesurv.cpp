#include <iostream>

#include "codesurv/cli.hpp"

int main(int argc, char** argv) { return codesurv::cli::run(argc, argv, std::cout, std::cerr); }
