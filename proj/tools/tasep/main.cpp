#include <iostream>
#include <string>
#include <vector>

#include "tasep/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return tasep::cli::run(args, std::cout, std::cerr);
}
