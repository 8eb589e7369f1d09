#include <iostream>

#include "rqe/cli.hpp"

int main(int argc, char** argv) { return rqe::cli::cli_main(argc, argv, std::cout, std::cerr); }
