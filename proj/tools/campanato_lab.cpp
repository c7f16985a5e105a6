#include "campanato/app.hpp"

#include <iostream>

int main(int argc, char** argv) { return campanato::app::run_cli(argc, argv, std::cout, std::cerr); }
