#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rousk {

/// Configuration problems (malformed JSON, unknown keys, unresolvable names).
/// The CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SuiteOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
};

/// Executes every check in the JSON config, writes verdicts.json,
/// summary.csv and metadata.json under out_dir, and prints one verdict line
/// per check. Returns 0 when all checks pass, 1 otherwise. Throws
/// ConfigError for bad configs and other exceptions for internal errors.
int run_suite(const std::string& config_text, const std::string& out_dir,
              const SuiteOverrides& overrides, std::ostream& log);

/// Runs only the exit-density checks of the config and writes the calibrated
/// envelope constant to out_dir/c1.json. Returns 0 on success.
int run_calibration(const std::string& config_text, const std::string& out_dir,
                    const SuiteOverrides& overrides, std::ostream& log);

/// Catalog of domain identifiers and check names, for `list`.
std::string catalog_text();

/// Check names accepted in configs.
std::vector<std::string> check_names();

}  // namespace rousk
