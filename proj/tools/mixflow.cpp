#include <iostream>

#include "mixflow/cli.hpp"

int main(int argc, char** argv) { return mixflow::cli::run(argc, argv, std::cout, std::cerr); }
