#include <iostream>

#include "modflight/cli.hpp"

int main(int argc, char** argv) { return modflight::run_cli(argc, argv, std::cout, std::cerr); }
