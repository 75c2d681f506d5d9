#include <iostream>

#include "vcdp/cli.hpp"

int main(int argc, char** argv) {
    return vcdp::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
