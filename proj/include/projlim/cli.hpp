#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "projlim/gaussian.hpp"

namespace projlim::cli {

enum ExitCode : int { kSuccess = 0, kFailure = 1, kNotConverged = 2, kIllConditioned = 3 };

/// What a subcommand produces: the exit code plus the two output documents.
/// result.json additionally gets a "timestamp" key when written to disk.
struct RunResult {
    int exit_code = kSuccess;
    nlohmann::json result;
    std::string table_csv;
    std::vector<std::string> log;
};

/// {"type":"identity"} | {"type":"matrix","matrix":[[...]]} | {"type":"lattice",...}
CovarianceKernel kernel_from_json(const nlohmann::json& j);

// Each command validates its config (unknown keys rejected) and throws
// projlim::Error on invalid input.
RunResult cmd_converge(const nlohmann::json& config);
RunResult cmd_schwinger(const nlohmann::json& config);
RunResult cmd_check(const nlohmann::json& config);
RunResult cmd_oracle(const nlohmann::json& config);

/// Writes result.json and table.csv into outdir (created if missing).
void write_outputs(const RunResult& run, const std::string& outdir);

/// projlim {converge|schwinger|check|oracle} -c <config.json> [-o <outdir>]
int run(int argc, char** argv);

} // namespace projlim::cli
