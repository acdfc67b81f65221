#include "errw/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace errw::cli {

namespace {

using json = nlohmann::ordered_json;

constexpr std::pair<Subject, std::string_view> subject_names[] = {
    {Subject::absorbed_return, "absorbed_return"},
    {Subject::return_by_horizon, "return_by_horizon"},
    {Subject::truncation_gap, "truncation_gap"},
    {Subject::recurrence_profile, "recurrence_profile"},
    {Subject::edge_coverage, "edge_coverage"},
    {Subject::power_identity, "power_identity"},
    {Subject::exchangeability, "exchangeability"},
    {Subject::lemma_fuzz, "lemma_fuzz"},
    {Subject::coupling_audit, "coupling_audit"},
};

[[noreturn]] void fail(const std::string& field, const std::string& what)
{
    throw ConfigError("config field '" + field + "': " + what);
}

std::uint64_t get_u64(const json& j, const std::string& field)
{
    if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0)) {
        fail(field, "expected a nonnegative integer");
    }
    return j.get<std::uint64_t>();
}

std::int64_t get_i64(const json& j, const std::string& field)
{
    if (!j.is_number_integer()) {
        fail(field, "expected an integer");
    }
    if (j.is_number_unsigned() && j.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
        fail(field, "integer out of range");
    }
    return j.get<std::int64_t>();
}

int get_int(const json& j, const std::string& field)
{
    const auto v = get_i64(j, field);
    if (v < INT32_MIN || v > INT32_MAX) {
        fail(field, "integer out of range");
    }
    return static_cast<int>(v);
}

double get_real(const json& j, const std::string& field)
{
    if (!j.is_number()) {
        fail(field, "expected a number");
    }
    return j.get<double>();
}

std::string get_string(const json& j, const std::string& field)
{
    if (!j.is_string()) {
        fail(field, "expected a string");
    }
    return j.get<std::string>();
}

GraphSource parse_graph(const json& j, const std::filesystem::path& base_dir)
{
    if (!j.is_object()) {
        fail("graph", "expected an object");
    }
    GraphSource g;
    if (!j.contains("family")) {
        fail("graph.family", "missing");
    }
    g.family = get_string(j.at("family"), "graph.family");
    for (const auto& [key, value] : j.items()) {
        const std::string field = "graph." + key;
        if (key == "family") {
            continue;
        } else if (key == "dim" && g.family == "lattice") {
            g.dim = get_int(value, field);
        } else if (key == "branching" && g.family == "regular_tree") {
            g.branching = get_int(value, field);
        } else if (key == "path" && g.family == "file") {
            std::filesystem::path p = get_string(value, field);
            if (p.is_relative() && !base_dir.empty()) {
                p = base_dir / p;
            }
            g.path = p.lexically_normal().string();
        } else if (key == "alpha" && g.family != "leaf_star") {
            if (value.is_string() && value.get<std::string>() == "file" && g.family == "file") {
                g.alpha.reset();
            } else {
                g.alpha = get_real(value, field);
            }
        } else if ((key == "a" || key == "b") && g.family == "leaf_star") {
            (key == "a" ? g.a : g.b) = get_real(value, field);
        } else {
            fail(field, "unknown key for family '" + g.family + "'");
        }
    }
    if (g.family == "lattice" || g.family == "regular_tree") {
        if (!g.alpha) {
            g.alpha = 1.0;
        }
    } else if (g.family == "file") {
        if (g.path.empty()) {
            fail("graph.path", "missing");
        }
    } else if (g.family != "leaf_star") {
        fail("graph.family", "unknown family '" + g.family + "' (lattice, regular_tree, file, leaf_star)");
    }
    return g;
}

}  // namespace

std::string_view to_string(Subject s)
{
    for (const auto& [subject, name] : subject_names) {
        if (subject == s) {
            return name;
        }
    }
    return "unknown";
}

std::optional<Subject> parse_subject(std::string_view name)
{
    for (const auto& [subject, n] : subject_names) {
        if (n == name) {
            return subject;
        }
    }
    return std::nullopt;
}

std::vector<int> parse_int_list(std::string_view text, std::string_view field)
{
    std::vector<int> values;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = std::min(text.find(',', pos), text.size());
        std::string_view item = text.substr(pos, comma - pos);
        while (!item.empty() && item.front() == ' ') {
            item.remove_prefix(1);
        }
        while (!item.empty() && item.back() == ' ') {
            item.remove_suffix(1);
        }
        int v = 0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (item.empty() || ec != std::errc{} || ptr != item.data() + item.size()) {
            fail(std::string(field), "invalid integer list '" + std::string(text) + "'");
        }
        values.push_back(v);
        pos = comma + 1;
    }
    return values;
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError("config syntax: top level must be an object");
    }
    ExperimentConfig c;
    for (const auto& [key, value] : j.items()) {
        if (key == "manifest") {
            continue;
        } else if (key == "graph") {
            c.graph = parse_graph(value, base_dir);
        } else if (key == "origin") {
            c.origin = get_i64(value, key);
        } else if (key == "subject") {
            const auto name = get_string(value, key);
            c.subject = parse_subject(name);
            if (!c.subject) {
                fail(key, "unknown subject '" + name + "'");
            }
        } else if (key == "n") {
            c.n = get_int(value, key);
        } else if (key == "n_list") {
            if (!value.is_array()) {
                fail(key, "expected an array of integers");
            }
            c.n_list.clear();
            for (const auto& item : value) {
                c.n_list.push_back(get_int(item, key));
            }
        } else if (key == "k") {
            const auto k = get_u64(value, key);
            if (k > 1'000'000) {
                fail(key, "too large");
            }
            c.k = static_cast<unsigned>(k);
        } else if (key == "horizon") {
            c.horizon = get_u64(value, key);
        } else if (key == "samples") {
            c.samples = get_u64(value, key);
        } else if (key == "seed") {
            c.seed = get_u64(value, key);
        } else if (key == "out") {
            c.out = get_string(value, key);
        } else {
            fail(key, "unknown key");
        }
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::ios_base::failure("cannot open config file " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path.parent_path());
}

nlohmann::ordered_json to_json(const ExperimentConfig& c)
{
    json j = json::object();
    if (c.graph) {
        json g = json::object();
        g["family"] = c.graph->family;
        if (c.graph->family == "lattice") {
            g["dim"] = c.graph->dim;
        } else if (c.graph->family == "regular_tree") {
            g["branching"] = c.graph->branching;
        } else if (c.graph->family == "file") {
            g["path"] = c.graph->path;
        } else if (c.graph->family == "leaf_star") {
            g["a"] = c.graph->a;
            g["b"] = c.graph->b;
        }
        if (c.graph->family != "leaf_star") {
            if (c.graph->alpha) {
                g["alpha"] = *c.graph->alpha;
            } else {
                g["alpha"] = "file";
            }
        }
        j["graph"] = std::move(g);
    }
    if (c.origin) {
        j["origin"] = *c.origin;
    }
    if (c.subject) {
        j["subject"] = std::string(to_string(*c.subject));
    }
    if (c.n) {
        j["n"] = *c.n;
    }
    if (!c.n_list.empty()) {
        j["n_list"] = c.n_list;
    }
    j["k"] = c.k;
    j["horizon"] = c.horizon;
    j["samples"] = c.samples;
    if (c.seed) {
        j["seed"] = *c.seed;
    }
    if (!c.out.empty()) {
        j["out"] = c.out;
    }
    return j;
}

void validate(const ExperimentConfig& c)
{
    if (!c.seed) {
        fail("seed", "missing; every run needs an explicit master seed");
    }
    if (c.samples < 1) {
        fail("samples", "must be positive");
    }
    if (c.horizon < 1) {
        fail("horizon", "must be positive");
    }
    if (c.k < 1) {
        fail("k", "must be positive");
    }
    if (c.n && *c.n < 0) {
        fail("n", "must be nonnegative");
    }
    for (std::size_t i = 0; i < c.n_list.size(); ++i) {
        if (c.n_list[i] < 0) {
            fail("n_list", "entries must be nonnegative");
        }
        if (i > 0 && c.n_list[i] <= c.n_list[i - 1]) {
            fail("n_list", "must be strictly increasing");
        }
    }
    if (c.graph) {
        const auto& g = *c.graph;
        if (g.family == "lattice" && (g.dim < 1 || g.dim > 8)) {
            fail("graph.dim", "must be in 1..8");
        }
        if (g.family == "regular_tree" && g.branching < 1) {
            fail("graph.branching", "must be positive");
        }
        if (g.alpha && !(*g.alpha > 0.0)) {
            fail("graph.alpha", "must be positive");
        }
        if (g.family == "leaf_star" && (!(g.a > 0.0) || !(g.b > 0.0))) {
            fail(g.a > 0.0 ? "graph.b" : "graph.a", "must be positive");
        }
    }
}

}  // namespace errw::cli
