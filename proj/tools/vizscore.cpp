#include "vizscore/cli.hpp"

#include <string>
#include <vector>

int main(int argc, char** argv) {
    return vizscore::cli::run(std::vector<std::string>(argv, argv + argc));
}
