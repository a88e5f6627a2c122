#include <iostream>

#include "hnamor/cli.hpp"

int main(int argc, char** argv)
{
    return hnamor::cli_main(argc, argv, std::cout, std::cerr);
}
