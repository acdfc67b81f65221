#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace errw::graph {

using VertexId = std::int64_t;
using EdgeId = std::int64_t;

/// Raised when an oracle reports edges inconsistently (asymmetric or unsorted).
class OracleInconsistency : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised on malformed graph files; the message carries the line number.
class GraphFileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Edge {
    EdgeId id = 0;
    VertexId u = 0;
    VertexId v = 0;
    double weight = 1.0;

    bool is_loop() const noexcept { return u == v; }
    VertexId other(VertexId x) const noexcept { return x == u ? v : u; }
};

/// One edge as seen from one of its endpoints.
struct Incidence {
    EdgeId edge = 0;
    VertexId other = 0;
    double weight = 1.0;

    friend bool operator==(const Incidence&, const Incidence&) = default;
};

/// Locally finite undirected graph, possibly infinite, queried vertex by vertex.
///
/// Contract: `neighbors(v, out)` replaces `out` with the edges incident to `v`
/// in strictly ascending edge id order, a self-loop appearing once. Reports are
/// symmetric and deterministic. Implementations are immutable and safe to query
/// from several threads at once.
class GraphOracle {
public:
    virtual ~GraphOracle() = default;

    virtual VertexId root() const = 0;
    virtual void neighbors(VertexId v, std::vector<Incidence>& out) const = 0;
    /// Short human-readable family name, e.g. "lattice(2)".
    virtual std::string descriptor() const = 0;
    /// Content hash identifying the graph and its weights.
    virtual std::uint64_t content_hash() const = 0;

    std::vector<Incidence> neighbors(VertexId v) const
    {
        std::vector<Incidence> out;
        neighbors(v, out);
        return out;
    }
};

/// Finite multigraph with positive weights. Vertex ids are arbitrary integers;
/// internally vertices and edges are also addressed by dense indices.
class FiniteGraph final : public GraphOracle {
public:
    struct Arc {
        std::uint32_t edge_index;
        std::uint32_t other_index;
    };

    FiniteGraph() = default;
    /// Throws std::invalid_argument on duplicate vertices/edge ids, unknown
    /// endpoints or non-positive weights.
    FiniteGraph(std::vector<VertexId> vertices, std::vector<Edge> edges, VertexId root);

    VertexId root() const override { return root_; }
    using GraphOracle::neighbors;
    void neighbors(VertexId v, std::vector<Incidence>& out) const override;
    std::string descriptor() const override { return descriptor_; }
    std::uint64_t content_hash() const override;

    void set_descriptor(std::string d) { descriptor_ = std::move(d); }

    std::size_t vertex_count() const noexcept { return vertices_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    std::span<const VertexId> vertices() const noexcept { return vertices_; }
    std::span<const Edge> edges() const noexcept { return edges_; }

    bool contains(VertexId v) const { return vertex_index_.contains(v); }
    /// Dense index of `v`; throws std::out_of_range for unknown vertices.
    std::uint32_t index_of(VertexId v) const;
    std::optional<std::uint32_t> edge_index_of(EdgeId e) const;
    const Edge& edge(EdgeId e) const;
    VertexId vertex_at(std::uint32_t index) const { return vertices_[index]; }
    std::span<const Arc> arcs(std::uint32_t vertex_index) const { return incidence_[vertex_index]; }
    std::size_t degree(VertexId v) const { return incidence_[index_of(v)].size(); }

private:
    std::vector<VertexId> vertices_;
    std::vector<Edge> edges_;
    std::unordered_map<VertexId, std::uint32_t> vertex_index_;
    std::unordered_map<EdgeId, std::uint32_t> edge_index_;
    std::vector<std::vector<Arc>> incidence_;
    VertexId root_ = 0;
    std::string descriptor_ = "finite";
};

/// Integer lattice Z^d with nearest-neighbour edges and constant weight.
///
/// For d = 1 the vertex id is the coordinate itself. For d >= 2 coordinates
/// are packed into 60/d-bit biased fields. The edge from x to x + e_i has id
/// `id(x) * d + i`.
class LatticeOracle final : public GraphOracle {
public:
    LatticeOracle(int dim, double alpha);

    VertexId root() const override { return encode(std::vector<std::int64_t>(dim_, 0)); }
    using GraphOracle::neighbors;
    void neighbors(VertexId v, std::vector<Incidence>& out) const override;
    std::string descriptor() const override;
    std::uint64_t content_hash() const override;

    int dim() const noexcept { return dim_; }
    double alpha() const noexcept { return alpha_; }
    VertexId encode(std::span<const std::int64_t> coords) const;
    std::vector<std::int64_t> decode(VertexId v) const;

private:
    int dim_;
    double alpha_;
    int bits_;
    std::int64_t bias_;
};

/// Rooted tree where every vertex has `branching` children (root degree b,
/// other degrees b + 1). Heap numbering: children of v are b*v+1 .. b*v+b;
/// the edge to a child carries the child's id.
class RegularTreeOracle final : public GraphOracle {
public:
    RegularTreeOracle(int branching, double alpha);

    VertexId root() const override { return 0; }
    using GraphOracle::neighbors;
    void neighbors(VertexId v, std::vector<Incidence>& out) const override;
    std::string descriptor() const override;
    std::uint64_t content_hash() const override;

    int branching() const noexcept { return branching_; }
    double alpha() const noexcept { return alpha_; }

private:
    int branching_;
    double alpha_;
};

struct FamilySpec {
    std::string name;        // "lattice", "regular_tree", "finite_from_file"
    int parameter = 1;       // dimension or branching
    double alpha = 1.0;      // constant weight for builtin families
    std::filesystem::path path;              // finite_from_file only
    std::optional<double> alpha_override;    // finite_from_file: replace file weights
};

/// Throws std::invalid_argument for unknown families or bad parameters,
/// GraphFileError for unreadable or malformed files.
std::shared_ptr<const GraphOracle> builtin_family(const FamilySpec& spec);

/// Parses `graph <num_vertices>` followed by `<edge_id> <u> <v> <alpha>` lines.
/// Blank lines and lines starting with '#' are skipped.
FiniteGraph read_graph(std::istream& in, VertexId root = 0);
FiniteGraph read_graph_file(const std::filesystem::path& path, VertexId root = 0);
void write_graph(std::ostream& out, const FiniteGraph& g);

using Distances = std::unordered_map<VertexId, int>;

/// Vertices at graph distance <= radius from `origin`, with exact distances.
/// Every reported edge between two ball vertices is checked for symmetry.
Distances ball(const GraphOracle& oracle, VertexId origin, int radius);

/// The finite graph built from B(n+1) with the sphere S(n+1) identified to a
/// single absorbing vertex `delta`. Edge ids are kept from the original graph,
/// so `edge_to_original` is the identity on the surviving edges.
struct Truncation {
    int radius = 0;
    FiniteGraph graph;
    VertexId origin = 0;
    std::optional<VertexId> delta;   // absent when S(n+1) is empty
    std::unordered_map<EdgeId, EdgeId> edge_to_original;
    Distances distances;             // original distances on B(n+1)

    /// Image of an original vertex of B(n+1) in G_n.
    VertexId image(VertexId original) const;
    /// Distances restricted to B(n); everything else lies outside the ball.
    Distances inner_distances() const;
};

struct TruncateOptions {
    /// Keep edges joining two sphere vertices as self-loops at delta.
    bool keep_sphere_edges = true;
};

Truncation truncate(const GraphOracle& oracle, VertexId origin, int n, TruncateOptions options = {});

}  // namespace errw::graph
