#pragma once

#include <ostream>
#include <string>

#include "fdrscca/cli/run_config.hpp"

namespace fdrscca::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;  // verify mode only
inline constexpr int kExitUsage = 2;        // flags, config, I/O, CSV parsing
inline constexpr int kExitPipeline = 3;     // library errors while analyzing

// Parses flags (and --config), resolves the seed and dispatches on --mode.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// `config.seed` must be set. `seed_source` is recorded in the manifest
// ("flag", "config" or "entropy").
int cmd_analyze(const RunConfig& config, const std::string& seed_source, std::ostream& out,
                std::ostream& err);
int cmd_simulate(const RunConfig& config, const std::string& seed_source, std::ostream& out,
                 std::ostream& err);
int cmd_verify(const RunConfig& config, const std::string& seed_source, std::ostream& out,
               std::ostream& err);

namespace detail {
// Writes `content` to dir/name, creating dir when needed. Throws std::runtime_error.
void write_file(const std::string& dir, const std::string& name, const std::string& content);
// "# fdrscca <version> config=<compact json>" line embedded at the top of CSV outputs.
std::string csv_preamble(const Json& config_echo);
Json manifest(const RunConfig& config, const std::string& seed_source, const Json& files);
}  // namespace detail

}  // namespace fdrscca::cli
