#include "muygps/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return muygps::cli::run(argc, argv, std::cout, std::cerr);
}
