#include "errw/graph.hpp"

#include "errw/hash.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace errw::graph {

namespace {

std::uint64_t double_bits(double x) { return std::bit_cast<std::uint64_t>(x); }

void require_weight(double w, const char* what)
{
    if (!(w > 0.0) || !std::isfinite(w)) {
        throw std::invalid_argument(std::string(what) + ": edge weights must be positive and finite");
    }
}

}  // namespace

// FiniteGraph

FiniteGraph::FiniteGraph(std::vector<VertexId> vertices, std::vector<Edge> edges, VertexId root)
    : vertices_(std::move(vertices)), edges_(std::move(edges)), root_(root)
{
    if (vertices_.size() >= std::numeric_limits<std::uint32_t>::max()
        || edges_.size() >= std::numeric_limits<std::uint32_t>::max()) {
        throw std::invalid_argument("FiniteGraph: too many vertices or edges");
    }
    vertex_index_.reserve(vertices_.size());
    for (std::uint32_t i = 0; i < vertices_.size(); ++i) {
        if (!vertex_index_.emplace(vertices_[i], i).second) {
            throw std::invalid_argument("FiniteGraph: duplicate vertex " + std::to_string(vertices_[i]));
        }
    }
    if (!vertices_.empty() && !vertex_index_.contains(root_)) {
        throw std::invalid_argument("FiniteGraph: root " + std::to_string(root_) + " is not a vertex");
    }

    std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) { return a.id < b.id; });
    incidence_.assign(vertices_.size(), {});
    edge_index_.reserve(edges_.size());
    for (std::uint32_t i = 0; i < edges_.size(); ++i) {
        const Edge& e = edges_[i];
        require_weight(e.weight, "FiniteGraph");
        if (!edge_index_.emplace(e.id, i).second) {
            throw std::invalid_argument("FiniteGraph: duplicate edge id " + std::to_string(e.id));
        }
        auto iu = vertex_index_.find(e.u);
        auto iv = vertex_index_.find(e.v);
        if (iu == vertex_index_.end() || iv == vertex_index_.end()) {
            throw std::invalid_argument("FiniteGraph: edge " + std::to_string(e.id) + " has an unknown endpoint");
        }
        // Edges are visited in ascending id, so incidence lists come out sorted.
        incidence_[iu->second].push_back({i, iv->second});
        if (!e.is_loop()) {
            incidence_[iv->second].push_back({i, iu->second});
        }
    }
}

void FiniteGraph::neighbors(VertexId v, std::vector<Incidence>& out) const
{
    out.clear();
    for (const Arc& a : incidence_[index_of(v)]) {
        const Edge& e = edges_[a.edge_index];
        out.push_back({e.id, vertices_[a.other_index], e.weight});
    }
}

std::uint64_t FiniteGraph::content_hash() const
{
    Fnv1a h;
    h.update("finite");
    std::vector<VertexId> sorted(vertices_.begin(), vertices_.end());
    std::sort(sorted.begin(), sorted.end());
    h.update_u64(sorted.size());
    for (VertexId v : sorted) {
        h.update_u64(static_cast<std::uint64_t>(v));
    }
    h.update_u64(edges_.size());
    for (const Edge& e : edges_) {
        h.update_u64(static_cast<std::uint64_t>(e.id));
        h.update_u64(static_cast<std::uint64_t>(e.u));
        h.update_u64(static_cast<std::uint64_t>(e.v));
        h.update_u64(double_bits(e.weight));
    }
    h.update_u64(static_cast<std::uint64_t>(root_));
    return h.digest();
}

std::uint32_t FiniteGraph::index_of(VertexId v) const
{
    auto it = vertex_index_.find(v);
    if (it == vertex_index_.end()) {
        throw std::out_of_range("FiniteGraph: unknown vertex " + std::to_string(v));
    }
    return it->second;
}

std::optional<std::uint32_t> FiniteGraph::edge_index_of(EdgeId e) const
{
    auto it = edge_index_.find(e);
    if (it == edge_index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

const Edge& FiniteGraph::edge(EdgeId e) const
{
    auto idx = edge_index_of(e);
    if (!idx) {
        throw std::out_of_range("FiniteGraph: unknown edge " + std::to_string(e));
    }
    return edges_[*idx];
}

// LatticeOracle

LatticeOracle::LatticeOracle(int dim, double alpha) : dim_(dim), alpha_(alpha)
{
    if (dim < 1 || dim > 8) {
        throw std::invalid_argument("lattice: dimension must be in 1..8");
    }
    require_weight(alpha, "lattice");
    bits_ = dim == 1 ? 64 : 60 / dim;
    bias_ = dim == 1 ? 0 : (std::int64_t{1} << (bits_ - 1));
}

VertexId LatticeOracle::encode(std::span<const std::int64_t> coords) const
{
    if (static_cast<int>(coords.size()) != dim_) {
        throw std::invalid_argument("lattice: coordinate count does not match dimension");
    }
    if (dim_ == 1) {
        return coords[0];
    }
    std::int64_t id = 0;
    for (int i = 0; i < dim_; ++i) {
        const std::int64_t field = coords[i] + bias_;
        if (field < 0 || field >= (std::int64_t{1} << bits_)) {
            throw std::overflow_error("lattice: coordinate out of representable range");
        }
        id |= field << (bits_ * i);
    }
    return id;
}

std::vector<std::int64_t> LatticeOracle::decode(VertexId v) const
{
    if (dim_ == 1) {
        return {v};
    }
    std::vector<std::int64_t> coords(dim_);
    const std::int64_t mask = (std::int64_t{1} << bits_) - 1;
    for (int i = 0; i < dim_; ++i) {
        coords[i] = ((v >> (bits_ * i)) & mask) - bias_;
    }
    return coords;
}

void LatticeOracle::neighbors(VertexId v, std::vector<Incidence>& out) const
{
    out.clear();
    if (dim_ == 1) {
        constexpr std::int64_t limit = std::int64_t{1} << 62;
        if (v <= -limit || v >= limit) {
            throw std::overflow_error("lattice: coordinate out of representable range");
        }
        out.push_back({v - 1, v - 1, alpha_});
        out.push_back({v, v + 1, alpha_});
        return;
    }
    const std::int64_t mask = (std::int64_t{1} << bits_) - 1;
    for (int i = 0; i < dim_; ++i) {
        const std::int64_t field = (v >> (bits_ * i)) & mask;
        const std::int64_t unit = std::int64_t{1} << (bits_ * i);
        if (field == 0 || field == mask) {
            throw std::overflow_error("lattice: coordinate out of representable range");
        }
        const VertexId lower = v - unit;
        const VertexId upper = v + unit;
        out.push_back({lower * dim_ + i, lower, alpha_});
        out.push_back({v * dim_ + i, upper, alpha_});
    }
    std::sort(out.begin(), out.end(), [](const Incidence& a, const Incidence& b) { return a.edge < b.edge; });
}

std::string LatticeOracle::descriptor() const { return "lattice(" + std::to_string(dim_) + ")"; }

std::uint64_t LatticeOracle::content_hash() const
{
    Fnv1a h;
    h.update(descriptor());
    h.update_u64(double_bits(alpha_));
    return h.digest();
}

// RegularTreeOracle

RegularTreeOracle::RegularTreeOracle(int branching, double alpha) : branching_(branching), alpha_(alpha)
{
    if (branching < 1) {
        throw std::invalid_argument("regular_tree: branching must be positive");
    }
    require_weight(alpha, "regular_tree");
}

void RegularTreeOracle::neighbors(VertexId v, std::vector<Incidence>& out) const
{
    out.clear();
    if (v < 0) {
        throw std::out_of_range("regular_tree: negative vertex id");
    }
    const std::int64_t b = branching_;
    if (v > (std::numeric_limits<std::int64_t>::max() - b) / b) {
        throw std::overflow_error("regular_tree: vertex depth exceeds id range");
    }
    if (v > 0) {
        out.push_back({v, (v - 1) / b, alpha_});
    }
    for (std::int64_t c = 1; c <= b; ++c) {
        out.push_back({b * v + c, b * v + c, alpha_});
    }
}

std::string RegularTreeOracle::descriptor() const { return "regular_tree(" + std::to_string(branching_) + ")"; }

std::uint64_t RegularTreeOracle::content_hash() const
{
    Fnv1a h;
    h.update(descriptor());
    h.update_u64(double_bits(alpha_));
    return h.digest();
}

// Graph files

FiniteGraph read_graph(std::istream& in, VertexId root)
{
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::int64_t> vertex_count;
    std::vector<Edge> edges;
    std::map<EdgeId, std::size_t> seen;

    auto fail = [&](const std::string& msg) -> void {
        throw GraphFileError("graph file line " + std::to_string(line_no) + ": " + msg);
    };

    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string first;
        if (!(fields >> first) || first[0] == '#') {
            continue;
        }
        if (!vertex_count) {
            std::int64_t count = -1;
            if (first != "graph" || !(fields >> count) || count < 0) {
                fail("expected header 'graph <num_vertices>'");
            }
            vertex_count = count;
            continue;
        }
        std::string u_text, v_text, w_text, extra;
        if (!(fields >> u_text >> v_text >> w_text) || (fields >> extra)) {
            fail("expected '<edge_id> <u> <v> <alpha>'");
        }
        auto parse_int = [&](const std::string& s, const char* name) {
            std::int64_t value = 0;
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
            if (ec != std::errc{} || ptr != s.data() + s.size()) {
                fail(std::string("invalid ") + name + " '" + s + "'");
            }
            return value;
        };
        Edge e;
        e.id = parse_int(first, "edge id");
        e.u = parse_int(u_text, "vertex");
        e.v = parse_int(v_text, "vertex");
        auto [ptr, ec] = std::from_chars(w_text.data(), w_text.data() + w_text.size(), e.weight);
        if (ec != std::errc{} || ptr != w_text.data() + w_text.size()) {
            fail("invalid weight '" + w_text + "'");
        }
        if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
            fail("weight must be positive and finite");
        }
        if (e.u < 0 || e.u >= *vertex_count || e.v < 0 || e.v >= *vertex_count) {
            fail("vertex out of range");
        }
        if (auto [it, fresh] = seen.emplace(e.id, line_no); !fresh) {
            fail("duplicate edge id " + std::to_string(e.id) + " (first on line " + std::to_string(it->second) + ")");
        }
        edges.push_back(e);
    }
    if (!vertex_count) {
        throw GraphFileError("graph file: missing 'graph <num_vertices>' header");
    }
    if (root < 0 || root >= *vertex_count) {
        throw GraphFileError("graph file: origin " + std::to_string(root) + " is not a vertex");
    }
    std::vector<VertexId> vertices(static_cast<std::size_t>(*vertex_count));
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        vertices[i] = static_cast<VertexId>(i);
    }
    return FiniteGraph(std::move(vertices), std::move(edges), root);
}

FiniteGraph read_graph_file(const std::filesystem::path& path, VertexId root)
{
    std::ifstream in(path);
    if (!in) {
        throw GraphFileError("cannot open graph file " + path.string());
    }
    FiniteGraph g = read_graph(in, root);
    g.set_descriptor("file(" + path.filename().string() + ")");
    return g;
}

void write_graph(std::ostream& out, const FiniteGraph& g)
{
    out << "graph " << g.vertex_count() << '\n';
    char buf[32];
    for (const Edge& e : g.edges()) {
        std::snprintf(buf, sizeof buf, "%.17g", e.weight);
        out << e.id << ' ' << g.index_of(e.u) << ' ' << g.index_of(e.v) << ' ' << buf << '\n';
    }
}

std::shared_ptr<const GraphOracle> builtin_family(const FamilySpec& spec)
{
    if (spec.name == "lattice") {
        if (spec.parameter < 1) {
            throw std::invalid_argument("lattice: dimension must be positive");
        }
        return std::make_shared<LatticeOracle>(spec.parameter, spec.alpha);
    }
    if (spec.name == "regular_tree") {
        return std::make_shared<RegularTreeOracle>(spec.parameter, spec.alpha);
    }
    if (spec.name == "finite_from_file") {
        FiniteGraph g = read_graph_file(spec.path, 0);
        if (spec.alpha_override) {
            require_weight(*spec.alpha_override, "finite_from_file");
            std::vector<Edge> edges(g.edges().begin(), g.edges().end());
            for (Edge& e : edges) {
                e.weight = *spec.alpha_override;
            }
            std::vector<VertexId> vertices(g.vertices().begin(), g.vertices().end());
            std::string d = g.descriptor();
            g = FiniteGraph(std::move(vertices), std::move(edges), g.root());
            g.set_descriptor(std::move(d));
        }
        return std::make_shared<FiniteGraph>(std::move(g));
    }
    throw std::invalid_argument("unknown graph family '" + spec.name + "'");
}

// Balls and truncation

namespace {

struct Exploration {
    Distances distances;
    std::vector<VertexId> order;  // BFS order
    std::unordered_map<VertexId, std::vector<Incidence>> adjacency;
};

Exploration explore(const GraphOracle& oracle, VertexId origin, int radius)
{
    if (radius < 0) {
        throw std::invalid_argument("ball: radius must be nonnegative");
    }
    Exploration ex;
    std::deque<VertexId> queue{origin};
    ex.distances.emplace(origin, 0);
    while (!queue.empty()) {
        const VertexId u = queue.front();
        queue.pop_front();
        ex.order.push_back(u);
        auto& adj = ex.adjacency[u];
        oracle.neighbors(u, adj);
        for (std::size_t i = 1; i < adj.size(); ++i) {
            if (adj[i - 1].edge >= adj[i].edge) {
                throw OracleInconsistency("oracle: incidences of vertex " + std::to_string(u)
                                          + " are not in strictly ascending edge id order");
            }
        }
        const int du = ex.distances.at(u);
        if (du == radius) {
            continue;
        }
        for (const Incidence& inc : adj) {
            if (ex.distances.emplace(inc.other, du + 1).second) {
                queue.push_back(inc.other);
            }
        }
    }

    for (const VertexId u : ex.order) {
        for (const Incidence& inc : ex.adjacency.at(u)) {
            auto other = ex.adjacency.find(inc.other);
            if (other == ex.adjacency.end()) {
                continue;
            }
            const auto& list = other->second;
            auto it = std::lower_bound(list.begin(), list.end(), inc.edge,
                                       [](const Incidence& x, EdgeId e) { return x.edge < e; });
            if (it == list.end() || it->edge != inc.edge || it->other != u || it->weight != inc.weight) {
                throw OracleInconsistency("oracle: edge " + std::to_string(inc.edge) + " reported at "
                                          + std::to_string(u) + " is not reported identically at "
                                          + std::to_string(inc.other));
            }
        }
    }
    return ex;
}

}  // namespace

Distances ball(const GraphOracle& oracle, VertexId origin, int radius)
{
    return explore(oracle, origin, radius).distances;
}

VertexId Truncation::image(VertexId original) const
{
    auto it = distances.find(original);
    if (it == distances.end()) {
        throw std::out_of_range("truncation: vertex " + std::to_string(original) + " lies outside B(n+1)");
    }
    return it->second <= radius ? original : *delta;
}

Distances Truncation::inner_distances() const
{
    Distances inner;
    for (const auto& [v, d] : distances) {
        if (d <= radius) {
            inner.emplace(v, d);
        }
    }
    return inner;
}

Truncation truncate(const GraphOracle& oracle, VertexId origin, int n, TruncateOptions options)
{
    if (n < 0) {
        throw std::invalid_argument("truncate: n must be nonnegative");
    }
    Exploration ex = explore(oracle, origin, n + 1);

    Truncation t;
    t.radius = n;
    t.origin = origin;
    t.distances = ex.distances;

    std::vector<VertexId> vertices;
    bool sphere_nonempty = false;
    for (const VertexId v : ex.order) {
        if (ex.distances.at(v) <= n) {
            vertices.push_back(v);
        } else {
            sphere_nonempty = true;
        }
    }
    std::sort(vertices.begin(), vertices.end());
    if (sphere_nonempty) {
        VertexId delta = std::numeric_limits<VertexId>::min();
        while (ex.distances.contains(delta)) {
            ++delta;
        }
        t.delta = delta;
        vertices.push_back(delta);
    }

    std::map<EdgeId, Edge> edges;
    for (const VertexId u : ex.order) {
        for (const Incidence& inc : ex.adjacency.at(u)) {
            if (!ex.distances.contains(inc.other) || edges.contains(inc.edge)) {
                continue;
            }
            const bool u_sphere = ex.distances.at(u) > n;
            const bool v_sphere = ex.distances.at(inc.other) > n;
            if (u_sphere && v_sphere && !options.keep_sphere_edges) {
                continue;
            }
            edges.emplace(inc.edge, Edge{inc.edge, t.image(u), t.image(inc.other), inc.weight});
        }
    }
    std::vector<Edge> edge_list;
    edge_list.reserve(edges.size());
    for (auto& [id, e] : edges) {
        t.edge_to_original.emplace(id, id);
        edge_list.push_back(e);
    }
    t.graph = FiniteGraph(std::move(vertices), std::move(edge_list), origin);
    t.graph.set_descriptor(oracle.descriptor() + "/G_" + std::to_string(n));
    return t;
}

}  // namespace errw::graph
