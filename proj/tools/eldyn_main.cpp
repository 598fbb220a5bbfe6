#include <string>
#include <vector>

#include "eldyn/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return eldyn::run_experiment(args);
}
