#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace eldyn {

/// Configuration mistakes (unknown key, bad value, missing input); mapped to
/// exit code 2 with the offending key in the message.
struct ConfigError : public std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Entry point behind the `eldyn` binary. args excludes the program name:
/// {subcommand, positionals..., --key, value, ...}. Returns the process exit
/// code: 0 success, 1 numerical/invariant failure, 2 config error.
int run_experiment(const std::vector<std::string>& args);

}  // namespace eldyn
