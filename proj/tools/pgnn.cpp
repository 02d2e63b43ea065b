#include <iostream>

#include "pgnn_cli.hpp"

int main(int argc, char** argv) { return pgnn::cli::run(argc, argv, std::cout, std::cerr); }
