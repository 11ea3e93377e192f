#include <string>
#include <vector>

#include "extra/cli.hpp"

int main(int argc, char** argv) {
    return extra::cli::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
