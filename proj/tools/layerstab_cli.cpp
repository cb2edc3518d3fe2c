#include <iostream>

#include "layerstab/cli_io.hpp"

int main(int argc, char** argv) { return layerstab::main_entry(argc, argv, std::cerr); }
