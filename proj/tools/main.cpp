#include "bfdr/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return bfdr::cli::run(argc, argv, std::cout, std::cerr);
}
