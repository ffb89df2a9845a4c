#include <iostream>

#include "zihmm/cli.hpp"

int main(int argc, char** argv) { return zihmm::run_cli(argc, argv, std::cout, std::cerr); }
