#include <iostream>

#include "cvtrade/cli.hpp"

int main(int argc, char** argv) { return cvtrade::run_cli(argc, argv, std::cout, std::cerr); }
