#include "hlsmm/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return hlsmm::cli::run(argc, argv, std::cout, std::cerr); }
