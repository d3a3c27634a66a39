#include <iostream>

#include "erl/experiment.hpp"

int main(int argc, char** argv) { return erl::run_cli(argc, argv, std::cout, std::cerr); }
