#include <string>
#include <vector>

#include "gdm/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return gdm::cli::run_command(args);
}
