#pragma once

#include "errw/config.hpp"

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace errw::cli {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config_error = 2;
inline constexpr int invariant_violation = 3;
inline constexpr int io_error = 4;
}  // namespace exit_code

class InvariantViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Command { simulate, estimate, profile, exchangeability, lemma_fuzz, coupling_audit, describe };

std::string_view to_string(Command c);
std::optional<Command> parse_command(std::string_view name);

/// Output of a command: the artifact body (CSV or report) plus any invariant
/// failure detected while producing it.
struct Artifact {
    std::string body;
    std::string summary;                   // one-line human summary
    std::optional<std::string> violation;  // set when an invariant failed
};

/// Resolves the subject implied by `command` and checks it is compatible with
/// the config. Throws ConfigError.
ExperimentConfig resolve(Command command, ExperimentConfig config);

/// Runs the experiment in-process. Throws ConfigError, IoError or library errors.
Artifact produce(Command command, const ExperimentConfig& config);

/// Human-readable plan: ball sizes, degrees, projected work. No sampling.
std::string describe(const ExperimentConfig& config);

/// JSON manifest: the full effective config plus the command and graph hash.
std::string manifest(Command command, const ExperimentConfig& config);

/// Full run: writes the artifact to config.out (stdout when empty) and the
/// manifest to `<out>.manifest.json`; reports to `log`. Returns an exit code.
int run_experiment(Command command, const ExperimentConfig& config, std::ostream& out, std::ostream& log);

}  // namespace errw::cli
