#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace sunflower::cli {

/// Process exit codes shared by every command.
enum ExitCode : int {
    kOk = 0,
    kRegressionFail = 1,
    kDivergence = 2,
    kInsufficientData = 3,
    kUsage = 64,
    kDomain = 65,
};

/// Machine-readable result of one command, used by the recipe runner.
struct Outcome {
    int exit_code = kOk;
    nlohmann::json summary = nlohmann::json::object();
};

/// Runs one invocation. `args` excludes the program name, e.g. {"classify", "--l", "3", ...}.
Outcome run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Resolves a relative output path against $SUNFLOWER_OUT_DIR when it is set.
std::string resolve_output_path(const std::string& path);

std::string tool_version();

}  // namespace sunflower::cli
