#include <iostream>

#include "nsda/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return nsda::run_cli(args, std::cout, std::cerr);
}
