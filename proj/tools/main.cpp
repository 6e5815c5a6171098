#include <iostream>

#include "skillforge/cli.hpp"

int main(int argc, char** argv) { return skillforge::run_cli(argc, argv, std::cout, std::cerr); }
