#include <iostream>

#include "flexsan/cli.hpp"

int main(int argc, char** argv) { return flexsan::run_cli(argc, argv, std::cout, std::cerr); }
