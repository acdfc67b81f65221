#include "errw/experiment.hpp"

#include "errw/estimators.hpp"
#include "errw/graph.hpp"
#include "errw/mixture.hpp"
#include "errw/walk.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

namespace errw::cli {

namespace {

using estimators::CsvRow;
using graph::VertexId;

constexpr std::pair<Command, std::string_view> command_names[] = {
    {Command::simulate, "simulate"},
    {Command::estimate, "estimate"},
    {Command::profile, "profile"},
    {Command::exchangeability, "exchangeability"},
    {Command::lemma_fuzz, "lemma-fuzz"},
    {Command::coupling_audit, "coupling-audit"},
    {Command::describe, "describe"},
};

std::string hex64(std::uint64_t v)
{
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

[[noreturn]] void config_fail(const std::string& field, const std::string& what)
{
    throw ConfigError("config field '" + field + "': " + what);
}

struct BuiltGraph {
    std::shared_ptr<const graph::GraphOracle> oracle;
    std::optional<mixture::LeafStarInstance> leaf_star;
    VertexId origin = 0;
    std::string family;
    std::string alpha;

    const graph::FiniteGraph* finite() const { return dynamic_cast<const graph::FiniteGraph*>(oracle.get()); }
};

BuiltGraph build_graph(const ExperimentConfig& c)
{
    if (!c.graph) {
        config_fail("graph", "missing");
    }
    const GraphSource& src = *c.graph;
    BuiltGraph built;
    if (src.family == "leaf_star") {
        built.leaf_star.emplace(src.a, src.b);
        built.oracle = std::make_shared<graph::FiniteGraph>(built.leaf_star->graph());
        built.alpha = estimators::format_real(src.a) + ":" + estimators::format_real(src.b);
    } else if (src.family == "file") {
        if (!std::filesystem::exists(src.path)) {
            throw IoError("graph file not found: " + src.path);
        }
        graph::FamilySpec spec{"finite_from_file", 0, 1.0, src.path, src.alpha};
        built.oracle = graph::builtin_family(spec);
        built.alpha = src.alpha ? estimators::format_real(*src.alpha) : "file";
    } else {
        graph::FamilySpec spec{src.family, src.family == "lattice" ? src.dim : src.branching, src.alpha.value_or(1.0),
                               {}, std::nullopt};
        built.oracle = graph::builtin_family(spec);
        built.alpha = estimators::format_real(src.alpha.value_or(1.0));
    }
    built.family = built.oracle->descriptor();
    built.origin = c.origin.value_or(built.oracle->root());
    if (const auto* f = built.finite(); f && !f->contains(built.origin)) {
        config_fail("origin", "vertex " + std::to_string(built.origin) + " is not in the graph");
    }
    return built;
}

std::vector<int> radii(const ExperimentConfig& c, const char* subject)
{
    if (!c.n_list.empty()) {
        return c.n_list;
    }
    if (c.n) {
        return {*c.n};
    }
    config_fail("n_list", std::string("required for ") + subject);
}

int single_radius(const ExperimentConfig& c, const char* subject)
{
    if (!c.n) {
        config_fail("n", std::string("required for ") + subject);
    }
    return *c.n;
}

CsvRow row_for(const BuiltGraph& g, const ExperimentConfig& c, std::optional<int> n, std::uint64_t horizon,
               const estimators::Estimate& e, std::string quantity)
{
    return {g.family, g.alpha, n, c.k, c.samples, horizon, e, std::move(quantity)};
}

std::string render_report(const walk::StoppingReport& r)
{
    auto show = [](const walk::StopTime& s) -> std::string {
        switch (s.status) {
        case walk::StopTime::Status::hit:
            return std::to_string(s.value);
        case walk::StopTime::Status::censored:
            return "CENSORED";
        default:
            return "NA";
        }
    };
    std::string text = "returns";
    for (const auto& t : r.return_times) {
        text += " " + show(t);
    }
    text += "; exit " + show(r.exit_time) + "; absorption " + show(r.absorption_time) + "; steps "
            + std::to_string(r.steps);
    return text;
}

Artifact simulate(const ExperimentConfig& c)
{
    const BuiltGraph g = build_graph(c);
    const std::uint64_t seed = replica_seed(*c.seed, 0);
    walk::Observation obs;
    obs.origin = g.origin;
    obs.k = c.k;
    graph::Distances distances;
    if (c.n) {
        distances = graph::ball(*g.oracle, g.origin, *c.n);
        obs.radius = *c.n;
        obs.distances = &distances;
    }
    if (g.leaf_star) {
        obs.delta = mixture::LeafStarInstance::delta;
    }
    walk::RunResult result;
    if (const auto* f = g.finite()) {
        walk::FiniteWalk w(*f, g.origin, seed);
        result = walk::run(w, walk::stop_at_return(), c.horizon, obs);
    } else {
        walk::OracleWalk w(*g.oracle, g.origin, seed);
        result = walk::run(w, walk::stop_at_return(), c.horizon, obs);
    }
    std::ostringstream body;
    walk::write_trajectory(body, result.trajectory, seed, g.oracle->content_hash(), c.horizon);
    return {body.str(), render_report(result.report), std::nullopt};
}

Artifact estimate(const ExperimentConfig& c)
{
    const BuiltGraph g = build_graph(c);
    std::ostringstream body;
    Artifact a;
    const auto subject = *c.subject;
    if (subject == Subject::edge_coverage) {
        const auto report = estimators::edge_coverage(*g.oracle, g.origin, c.horizon, c.samples, *c.seed);
        body << "replica,min_directed,untouched,region_edges\n";
        for (std::size_t i = 0; i < report.min_directed.size(); ++i) {
            body << i << ',' << report.min_directed[i] << ',' << report.untouched[i] << ','
                 << report.region_edges[i] << '\n';
        }
        a.summary = "edge coverage: minimum directed traversal count over replicas = "
                    + std::to_string(report.overall_min());
        a.body = body.str();
        return a;
    }

    estimators::write_csv_header(body);
    switch (subject) {
    case Subject::absorbed_return: {
        estimators::Estimate e;
        std::optional<int> n;
        if (g.leaf_star) {
            const estimators::AbsorbingTarget target{g.finite(), g.origin, mixture::LeafStarInstance::delta};
            e = estimators::estimate_absorbed_return(target, c.k, c.samples, *c.seed);
        } else {
            n = single_radius(c, "absorbed_return");
            const auto t = graph::truncate(*g.oracle, g.origin, *n);
            e = estimators::estimate_absorbed_return(t, c.k, c.samples, *c.seed);
        }
        estimators::write_csv_row(body, row_for(g, c, n, estimators::safety_horizon, e, "absorbed_return"));
        a.summary = "absorbed return: " + estimators::format_real(e.point) + " (censored "
                    + std::to_string(e.censored) + ")";
        if (e.censored > 0) {
            a.summary += "; replicas hit the safety horizon";
        }
        break;
    }
    case Subject::return_by_horizon: {
        const auto e = estimators::estimate_return_by_horizon(*g.oracle, g.origin, c.k, c.horizon, c.samples, *c.seed);
        estimators::write_csv_row(body, row_for(g, c, std::nullopt, c.horizon, e, "return_by_horizon"));
        a.summary = "return by horizon: " + estimators::format_real(e.point) + " (unresolved "
                    + std::to_string(e.censored) + ")";
        break;
    }
    case Subject::truncation_gap: {
        const auto sweep = estimators::truncation_gap_sweep(*g.oracle, g.origin, radii(c, "truncation_gap"), c.k,
                                                            c.horizon, c.samples, *c.seed);
        std::uint64_t violations = 0;
        for (const auto& r : sweep.rows) {
            estimators::write_csv_row(body, row_for(g, c, r.n, c.horizon, r.lhs, "lhs"));
            estimators::write_csv_row(body, row_for(g, c, r.n, c.horizon, r.rhs, "rhs"));
            estimators::write_csv_row(body, row_for(g, c, r.n, c.horizon, r.tail, "tail"));
            violations += r.identity_violations;
        }
        a.summary = "truncation gap: " + std::to_string(violations) + " identity violations, "
                    + std::to_string(sweep.tail_monotonicity_violations) + " tail monotonicity violations";
        if (!sweep.consistent()) {
            a.violation = a.summary;
        }
        break;
    }
    case Subject::power_identity: {
        if (!g.leaf_star) {
            config_fail("graph.family", "power_identity needs the leaf_star family");
        }
        const auto r = estimators::power_identity_check(*g.leaf_star, c.k, c.samples, *c.seed);
        estimators::write_csv_row(body, row_for(g, c, std::nullopt, estimators::safety_horizon, r.estimate,
                                                "power_identity"));
        const auto direct = mixture::leaf_star_return_prob(*g.leaf_star, c.k);
        a.summary = "power identity: exact " + to_fraction_string(r.exact) + ", z = " + estimators::format_real(r.z);
        if (direct != r.exact) {
            a.violation = "power identity: return probability " + to_fraction_string(direct)
                          + " differs from the Beta moment " + to_fraction_string(r.exact);
        }
        break;
    }
    default:
        config_fail("subject", "not an estimate subject");
    }
    a.body = body.str();
    return a;
}

Artifact profile(const ExperimentConfig& c)
{
    const BuiltGraph g = build_graph(c);
    std::ostringstream body;
    estimators::write_csv_header(body);
    estimators::RecurrenceProfile p;
    if (g.leaf_star) {
        // The leaf star is its own truncation at every radius.
        const estimators::AbsorbingTarget target{g.finite(), g.origin, mixture::LeafStarInstance::delta};
        for (int n : radii(c, "recurrence_profile")) {
            p.entries.push_back({n, c.k, estimators::estimate_absorbed_return(target, c.k, c.samples, *c.seed)});
        }
    } else {
        p = estimators::recurrence_profile(*g.oracle, g.origin, radii(c, "recurrence_profile"), c.k, c.samples,
                                           *c.seed);
    }
    for (const auto& e : p.entries) {
        estimators::write_csv_row(body, row_for(g, c, e.n, estimators::safety_horizon, e.estimate, "p_n"));
    }
    Artifact a{body.str(), "", std::nullopt};
    a.summary = std::string("recurrence profile: ") + std::to_string(p.entries.size()) + " radii, "
                + (estimators::nondecreasing_within_bands(p) ? "nondecreasing within bands"
                                                             : "significant decrease detected");
    return a;
}

Artifact exchangeability(const ExperimentConfig& c)
{
    const BuiltGraph g = build_graph(c);
    const auto* f = g.finite();
    if (!f) {
        config_fail("graph.family", "exchangeability needs a finite graph (file or leaf_star)");
    }
    if (c.horizon > 64) {
        config_fail("horizon", "path length for exchangeability must be at most 64");
    }
    const auto report = mixture::exchangeability_check(*f, g.origin, static_cast<unsigned>(c.horizon));
    std::ostringstream body;
    mixture::write_exchangeability(body, report);
    Artifact a{body.str(), "", std::nullopt};
    a.summary = "exchangeability: " + std::to_string(report.paths) + " paths, " + std::to_string(report.classes.size())
                + " classes, max spread " + to_fraction_string(report.max_spread) + ", total mass "
                + to_fraction_string(report.total_mass);
    if (!report.exchangeable()) {
        a.violation = a.summary;
    }
    return a;
}

Artifact lemma_fuzz(const ExperimentConfig& c)
{
    const auto r = mixture::lemma_fuzz(c.samples, c.k, *c.seed);
    std::ostringstream body;
    body << "rational_witnesses " << r.rational_witnesses << '\n'
         << "float_witnesses " << r.float_witnesses << '\n'
         << "violations " << r.violations << '\n'
         << "min_float_margin " << estimators::format_real(r.min_float_margin) << '\n';
    Artifact a{body.str(), "lemma fuzz: " + std::to_string(r.violations) + " violations", std::nullopt};
    if (r.violations > 0) {
        a.violation = a.summary;
    }
    return a;
}

Artifact coupling_audit(const ExperimentConfig& c)
{
    const BuiltGraph g = build_graph(c);
    const int n = single_radius(c, "coupling_audit");
    const auto r = estimators::coupling_audit(*g.oracle, g.origin, n, c.k, c.horizon, c.samples, *c.seed);
    std::ostringstream body;
    body << "replicas " << r.replicas << '\n'
         << "reached_exit " << r.reached_exit << '\n'
         << "pre_exit_divergences " << r.pre_exit_divergences << '\n'
         << "index_mismatches " << r.index_mismatches << '\n';
    Artifact a{body.str(), "", std::nullopt};
    a.summary = "coupling audit: " + std::to_string(r.pre_exit_divergences) + " pre-exit divergences, "
                + std::to_string(r.index_mismatches) + " index mismatches";
    if (!r.passed()) {
        a.violation = a.summary;
    }
    return a;
}

}  // namespace

std::string_view to_string(Command c)
{
    for (const auto& [cmd, name] : command_names) {
        if (cmd == c) {
            return name;
        }
    }
    return "unknown";
}

std::optional<Command> parse_command(std::string_view name)
{
    for (const auto& [cmd, n] : command_names) {
        if (n == name) {
            return cmd;
        }
    }
    return std::nullopt;
}

ExperimentConfig resolve(Command command, ExperimentConfig c)
{
    auto require_subject = [&](Subject s) {
        if (c.subject && *c.subject != s) {
            config_fail("subject", "'" + std::string(to_string(*c.subject)) + "' does not match command '"
                                       + std::string(to_string(command)) + "'");
        }
        c.subject = s;
    };
    switch (command) {
    case Command::estimate:
        if (!c.subject) {
            config_fail("subject", "required for estimate");
        }
        switch (*c.subject) {
        case Subject::absorbed_return:
        case Subject::return_by_horizon:
        case Subject::truncation_gap:
        case Subject::edge_coverage:
        case Subject::power_identity:
            break;
        default:
            config_fail("subject", "'" + std::string(to_string(*c.subject)) + "' is not an estimate subject");
        }
        break;
    case Command::profile:
        require_subject(Subject::recurrence_profile);
        break;
    case Command::exchangeability:
        require_subject(Subject::exchangeability);
        break;
    case Command::lemma_fuzz:
        require_subject(Subject::lemma_fuzz);
        break;
    case Command::coupling_audit:
        require_subject(Subject::coupling_audit);
        break;
    case Command::simulate:
    case Command::describe:
        break;
    }
    validate(c);
    if (!c.graph && c.subject != Subject::lemma_fuzz) {
        config_fail("graph", "missing");
    }
    return c;
}

Artifact produce(Command command, const ExperimentConfig& config)
{
    switch (command) {
    case Command::simulate:
        return simulate(config);
    case Command::estimate:
        return estimate(config);
    case Command::profile:
        return profile(config);
    case Command::exchangeability:
        return exchangeability(config);
    case Command::lemma_fuzz:
        return lemma_fuzz(config);
    case Command::coupling_audit:
        return coupling_audit(config);
    case Command::describe:
        return {describe(config), "", std::nullopt};
    }
    throw ConfigError("unknown command");
}

std::string describe(const ExperimentConfig& c)
{
    std::ostringstream out;
    if (c.subject) {
        out << "subject " << to_string(*c.subject) << '\n';
    }
    if (!c.graph) {
        out << "graph none\n";
        out << "work " << c.samples << " witnesses\n";
        return out.str();
    }
    const BuiltGraph g = build_graph(c);
    out << "graph " << g.family << " alpha " << g.alpha << " hash " << hex64(g.oracle->content_hash()) << '\n';
    out << "origin " << g.origin << '\n';
    std::vector<int> ns = c.n_list;
    if (ns.empty() && c.n) {
        ns.push_back(*c.n);
    }
    for (int n : ns) {
        const auto distances = graph::ball(*g.oracle, g.origin, n + 1);
        const auto t = graph::truncate(*g.oracle, g.origin, n);
        std::size_t min_deg = SIZE_MAX, max_deg = 0, total_deg = 0;
        std::vector<graph::Incidence> nbrs;
        for (const auto& [v, d] : distances) {
            g.oracle->neighbors(v, nbrs);
            min_deg = std::min(min_deg, nbrs.size());
            max_deg = std::max(max_deg, nbrs.size());
            total_deg += nbrs.size();
        }
        char mean[32];
        std::snprintf(mean, sizeof mean, "%.3f", static_cast<double>(total_deg) / static_cast<double>(distances.size()));
        out << "n " << n << " ball_radius " << n + 1 << " ball_vertices " << distances.size() << " ball_edges "
            << t.graph.edge_count() << " degree_min " << min_deg << " degree_max " << max_deg << " degree_mean "
            << mean << " truncated_vertices " << t.graph.vertex_count() << '\n';
    }
    const double budget = static_cast<double>(c.samples) * static_cast<double>(c.horizon)
                          * static_cast<double>(std::max<std::size_t>(ns.size(), 1));
    out << "work samples " << c.samples << " horizon " << c.horizon << " max_steps " << estimators::format_real(budget)
        << '\n';
    return out.str();
}

std::string manifest(Command command, const ExperimentConfig& config)
{
    auto j = to_json(config);
    nlohmann::ordered_json m = nlohmann::ordered_json::object();
    m["command"] = std::string(to_string(command));
    if (config.graph) {
        m["graph_hash"] = hex64(build_graph(config).oracle->content_hash());
    }
    m["format"] = 1;
    j["manifest"] = std::move(m);
    return j.dump(2) + "\n";
}

int run_experiment(Command command, const ExperimentConfig& config, std::ostream& out, std::ostream& log)
{
    try {
        const ExperimentConfig resolved = resolve(command, config);
        const Artifact artifact = produce(command, resolved);
        if (resolved.out.empty() || command == Command::describe) {
            out << artifact.body;
        } else {
            std::ofstream file(resolved.out, std::ios::binary);
            file << artifact.body;
            if (!file) {
                throw IoError("cannot write " + resolved.out);
            }
            std::ofstream mf(resolved.out + ".manifest.json", std::ios::binary);
            mf << manifest(command, resolved);
            if (!mf) {
                throw IoError("cannot write " + resolved.out + ".manifest.json");
            }
        }
        if (!artifact.summary.empty()) {
            log << artifact.summary << '\n';
        }
        if (artifact.violation) {
            log << "invariant violation: " << *artifact.violation << '\n';
            return exit_code::invariant_violation;
        }
        return exit_code::ok;
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << '\n';
        return exit_code::config_error;
    } catch (const graph::GraphFileError& e) {
        log << "config error: " << e.what() << '\n';
        return exit_code::config_error;
    } catch (const walk::EnumerationGuardExceeded& e) {
        log << "config error: " << e.what() << '\n';
        return exit_code::config_error;
    } catch (const IoError& e) {
        log << "i/o error: " << e.what() << '\n';
        return exit_code::io_error;
    } catch (const std::ios_base::failure& e) {
        log << "i/o error: " << e.what() << '\n';
        return exit_code::io_error;
    } catch (const std::invalid_argument& e) {
        log << "config error: " << e.what() << '\n';
        return exit_code::config_error;
    } catch (const std::exception& e) {
        log << "invariant violation: " << e.what() << '\n';
        return exit_code::invariant_violation;
    }
}

}  // namespace errw::cli
