#include <iostream>

#include "roifcn/commands.hpp"

int main(int argc, char** argv) { return roifcn::run_cli(argc, argv, std::cout, std::cerr); }
