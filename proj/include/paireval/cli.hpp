#pragma once

#include <map>
#include <string>

namespace paireval::cli {

// A fully resolved run: subcommand plus the flat key/value argument map that
// the manifest records. Flags > config file > defaults; by the time execute()
// sees a RunConfig every value is final.
struct RunConfig {
    std::string command;
    std::map<std::string, std::string> args;
};

// Exit codes: 0 success, 1 data error, 2 backend error, 64 usage.
constexpr int kExitOk = 0;
constexpr int kExitDataError = 1;
constexpr int kExitBackendError = 2;
constexpr int kExitUsage = 64;

int run(int argc, const char* const* argv);

// Dispatch a resolved config (also the rerun-from-manifest entry point).
int execute(const RunConfig& cfg);

} // namespace paireval::cli
