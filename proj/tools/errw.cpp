#include "errw/config.hpp"
#include "errw/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> samples;
    std::optional<std::uint64_t> horizon;
    std::optional<int> n;
    std::string n_list;
    std::optional<unsigned> k;
    std::optional<std::string> out;
};

void add_flags(CLI::App& cmd, Overrides& o)
{
    cmd.add_option("--config", o.config_path, "Experiment config (JSON)")->required();
    cmd.add_option("--seed", o.seed, "Master seed");
    cmd.add_option("--samples", o.samples, "Number of replicas");
    cmd.add_option("--horizon", o.horizon, "Step horizon (path length for exchangeability)");
    auto* n = cmd.add_option("--n", o.n, "Truncation radius");
    auto* list = cmd.add_option("--n-list", o.n_list, "Comma-separated truncation radii");
    n->excludes(list);
    cmd.add_option("--k", o.k, "Number of returns (max exponent for lemma-fuzz)");
    cmd.add_option("--out", o.out, "Output path (stdout when omitted)");
}

errw::cli::ExperimentConfig apply(errw::cli::ExperimentConfig c, const Overrides& o)
{
    if (o.seed) c.seed = *o.seed;
    if (o.samples) c.samples = *o.samples;
    if (o.horizon) c.horizon = *o.horizon;
    if (o.n) {
        c.n = *o.n;
        c.n_list.clear();
    }
    if (!o.n_list.empty()) {
        c.n_list = errw::cli::parse_int_list(o.n_list, "n_list");
        c.n.reset();
    }
    if (o.k) c.k = *o.k;
    if (o.out) c.out = *o.out;
    return c;
}

}  // namespace

int main(int argc, char** argv)
{
    using errw::cli::Command;
    CLI::App app{"Edge-reinforced random walk laboratory"};
    app.require_subcommand(1);

    Overrides overrides;
    const std::pair<Command, const char*> commands[] = {
        {Command::simulate, "Run one trajectory and dump it"},
        {Command::estimate, "Monte Carlo estimate for the configured subject"},
        {Command::profile, "Recurrence profile over truncation radii"},
        {Command::exchangeability, "Exact partial exchangeability check"},
        {Command::lemma_fuzz, "Random witnesses for the power inequality"},
        {Command::coupling_audit, "Audit the G / G_n coupling"},
        {Command::describe, "Print the experiment plan without sampling"},
    };
    std::vector<std::pair<Command, CLI::App*>> subs;
    for (const auto& [cmd, help] : commands) {
        auto* sub = app.add_subcommand(std::string(errw::cli::to_string(cmd)), help);
        add_flags(*sub, overrides);
        subs.emplace_back(cmd, sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : errw::cli::exit_code::config_error;
    }

    Command command = Command::describe;
    for (const auto& [cmd, sub] : subs) {
        if (sub->parsed()) {
            command = cmd;
        }
    }

    errw::cli::ExperimentConfig config;
    try {
        config = apply(errw::cli::load_config(overrides.config_path), overrides);
    } catch (const errw::cli::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return errw::cli::exit_code::config_error;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return errw::cli::exit_code::io_error;
    }
    return errw::cli::run_experiment(command, config, std::cout, std::cerr);
}
