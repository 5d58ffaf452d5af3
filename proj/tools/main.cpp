#include <iostream>

#include "qreason/cli/cli.hpp"

int main(int argc, char** argv) { return qreason::cli::run(argc, argv, std::cout, std::cerr); }
