#include <iostream>

#include "gesture/commands.hpp"

int main(int argc, char** argv) { return gesture::cli::run(argc, argv, std::cout, std::cerr); }
