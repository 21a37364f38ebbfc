#include <iostream>

#include "sqvm/cli.hpp"

int main(int argc, char **argv) { return sqvm::cli::main(argc, argv, std::cout, std::cerr); }
