#include <iostream>
#include <string>
#include <vector>

#include "axis_atlas/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return axis_atlas::cli::run_command(args, std::cout, std::cerr);
}
