#ifndef PILOTWAVE_CLI_HPP
#define PILOTWAVE_CLI_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pilotwave::cli {

inline constexpr const char* kToolName = "pilotwave";
inline constexpr const char* kToolVersion = "0.1.0";

/// Fixed documented default seed; runs never seed from the clock.
inline constexpr std::uint64_t kDefaultSeed = 1000003;

/// Exit codes: 0 success, 1 config/validation error, 2 numerical failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumerical = 2;

struct CliOptions {
    std::string config_path;            ///< optional flat key = value file
    std::vector<std::string> overrides; ///< repeatable "key=value" pairs
    std::string out_prefix = "run";
    std::optional<std::uint64_t> seed;
    std::string scenario; ///< overrides the config's scenario key
};

/// All known config keys with their defaults; unknown keys are rejected.
const std::map<std::string, std::string>& default_config();

/// Parses a flat `key = value` file with '#' comments. Throws
/// std::invalid_argument naming the offending line or key.
std::map<std::string, std::string> parse_config_file(const std::string& path);

/// Runs one scenario: validates the resolved config, writes the scenario
/// CSV(s), a re-runnable resolved config and a metadata JSON next to
/// out_prefix. Returns an exit code; metadata is emitted even on failure.
int run(const CliOptions& options);

} // namespace pilotwave::cli

#endif
