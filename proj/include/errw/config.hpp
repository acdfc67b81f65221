#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace errw::cli {

/// Parse or validation failure. The message names the offending field or the
/// line/column of a syntax error.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Subject {
    absorbed_return,
    return_by_horizon,
    truncation_gap,
    recurrence_profile,
    edge_coverage,
    power_identity,
    exchangeability,
    lemma_fuzz,
    coupling_audit,
};

std::string_view to_string(Subject s);
std::optional<Subject> parse_subject(std::string_view name);

struct GraphSource {
    std::string family;            // lattice | regular_tree | file | leaf_star
    int dim = 1;                   // lattice
    int branching = 2;             // regular_tree
    std::string path;              // file
    std::optional<double> alpha;   // constant weight; for files, absent means per-edge weights
    double a = 1.0;                // leaf_star
    double b = 1.0;

    friend bool operator==(const GraphSource&, const GraphSource&) = default;
};

struct ExperimentConfig {
    std::optional<GraphSource> graph;
    std::optional<std::int64_t> origin;
    std::optional<Subject> subject;
    std::optional<int> n;
    std::vector<int> n_list;
    unsigned k = 1;
    std::uint64_t horizon = 10'000;
    std::uint64_t samples = 1'000;
    std::optional<std::uint64_t> seed;
    std::string out;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses the JSON config grammar; unknown keys are rejected. A top-level
/// "manifest" object (written by runs) is accepted and ignored. Relative graph
/// file paths are resolved against `base_dir`.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const ExperimentConfig& config);

/// Field-level checks shared by every command (positivity, list ordering,
/// presence of the seed).
void validate(const ExperimentConfig& config);

/// Parses "a,b,c" into integers.
std::vector<int> parse_int_list(std::string_view text, std::string_view field);

}  // namespace errw::cli
