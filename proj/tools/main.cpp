#include "cli.hpp"

#include <iostream>

int main(int argc, char ** argv) {
    return hcodec::cli::run(argc, argv, std::cout);
}
