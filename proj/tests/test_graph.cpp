#include "errw/graph.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <deque>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

using namespace errw::graph;

namespace {

/// Plain BFS inside a finite graph: the reference for truncation distances.
Distances bfs(const FiniteGraph& g, VertexId origin)
{
    Distances d{{origin, 0}};
    std::deque<VertexId> q{origin};
    while (!q.empty()) {
        const VertexId u = q.front();
        q.pop_front();
        for (const auto& inc : g.neighbors(u)) {
            if (d.emplace(inc.other, d.at(u) + 1).second) {
                q.push_back(inc.other);
            }
        }
    }
    return d;
}

/// Reports edge 0 at vertex 0 but not at vertex 1.
class LopsidedOracle final : public GraphOracle {
public:
    VertexId root() const override { return 0; }
    using GraphOracle::neighbors;
    void neighbors(VertexId v, std::vector<Incidence>& out) const override
    {
        out.clear();
        if (v == 0) {
            out.push_back({0, 1, 1.0});
        }
    }
    std::string descriptor() const override { return "lopsided"; }
    std::uint64_t content_hash() const override { return 0; }
};

class UnsortedOracle final : public GraphOracle {
public:
    VertexId root() const override { return 0; }
    using GraphOracle::neighbors;
    void neighbors(VertexId v, std::vector<Incidence>& out) const override
    {
        out.clear();
        if (v == 0) {
            out.push_back({5, 1, 1.0});
            out.push_back({2, 1, 1.0});
        } else {
            out.push_back({2, 0, 1.0});
            out.push_back({5, 0, 1.0});
        }
    }
    std::string descriptor() const override { return "unsorted"; }
    std::uint64_t content_hash() const override { return 0; }
};

}  // namespace

TEST_CASE("ball on Z has lattice distances")
{
    LatticeOracle z(1, 1.0);
    const Distances expected{{-2, 2}, {-1, 1}, {0, 0}, {1, 1}, {2, 2}};
    CHECK(ball(z, 0, 2) == expected);
    CHECK(ball(z, 0, 0) == Distances{{0, 0}});
}

TEST_CASE("ball on the binary tree counts levels")
{
    RegularTreeOracle tree(2, 1.0);
    const Distances b = ball(tree, 0, 2);
    CHECK(b.size() == 7);
    std::multiset<int> levels;
    for (const auto& [v, d] : b) {
        levels.insert(d);
    }
    CHECK(levels == std::multiset<int>{0, 1, 1, 2, 2, 2, 2});
}

TEST_CASE("ball sizes on Z^2 follow 2r^2 + 2r + 1")
{
    LatticeOracle z2(2, 1.0);
    for (int r = 0; r <= 8; ++r) {
        CHECK(ball(z2, z2.root(), r).size() == static_cast<std::size_t>(2 * r * r + 2 * r + 1));
    }
}

TEST_CASE("ball rejects inconsistent oracles")
{
    CHECK_THROWS_AS(ball(LopsidedOracle{}, 0, 1), OracleInconsistency);
    CHECK_THROWS_AS(ball(UnsortedOracle{}, 0, 1), OracleInconsistency);
    CHECK_THROWS_AS(ball(LatticeOracle(1, 1.0), 0, -1), std::invalid_argument);
}

TEST_CASE("truncating Z at n = 1 closes the segment through delta")
{
    LatticeOracle z(1, 1.0);
    const Truncation t = truncate(z, 0, 1);
    REQUIRE(t.delta.has_value());
    const VertexId d = *t.delta;
    std::vector<VertexId> vs(t.graph.vertices().begin(), t.graph.vertices().end());
    std::sort(vs.begin(), vs.end());
    std::vector<VertexId> expected{-1, 0, 1, d};
    std::sort(expected.begin(), expected.end());
    CHECK(vs == expected);

    std::set<std::pair<VertexId, VertexId>> ends;
    for (const auto& e : t.graph.edges()) {
        CHECK_FALSE(e.is_loop());
        ends.insert(std::minmax(e.u, e.v));
    }
    CHECK(ends == std::set<std::pair<VertexId, VertexId>>{std::minmax<VertexId>(-1, 0), std::minmax<VertexId>(0, 1),
                                                          std::minmax<VertexId>(1, d), std::minmax<VertexId>(-1, d)});
    CHECK(t.graph.edge_count() == 4);
    CHECK(t.graph.degree(d) == 2);
}

TEST_CASE("truncating a triangle at n = 0 gives parallel edges and a loop at delta")
{
    const FiniteGraph tri = fixtures::triangle();
    const Truncation t = truncate(tri, 0, 0);
    REQUIRE(t.delta.has_value());
    CHECK(t.graph.vertex_count() == 2);
    CHECK(t.graph.edge_count() == 3);
    int parallel = 0, loops = 0;
    for (const auto& e : t.graph.edges()) {
        if (e.is_loop()) {
            ++loops;
            CHECK(e.u == *t.delta);
            CHECK(e.id == 1);
        } else {
            ++parallel;
            CHECK(std::minmax(e.u, e.v) == std::minmax<VertexId>(0, *t.delta));
        }
    }
    CHECK(parallel == 2);
    CHECK(loops == 1);
    // The loop appears once in delta's incidence list.
    CHECK(t.graph.degree(*t.delta) == 3);

    const Truncation stripped = truncate(tri, 0, 0, {.keep_sphere_edges = false});
    CHECK(stripped.graph.edge_count() == 2);
}

TEST_CASE("truncation beyond the diameter reproduces the graph without delta")
{
    const FiniteGraph p = fixtures::path3();  // diameter 2 from vertex 0
    for (int n : {2, 3, 7}) {
        const Truncation t = truncate(p, 0, n);
        CHECK_FALSE(t.delta.has_value());
        CHECK(t.graph.vertex_count() == 3);
        REQUIRE(t.graph.edge_count() == 2);
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(t.graph.edges()[i].id == p.edges()[i].id);
            CHECK(t.graph.edges()[i].weight == p.edges()[i].weight);
        }
    }
    // n = 1 still collapses S(2) = {2}.
    CHECK(truncate(p, 0, 1).delta.has_value());
}

TEST_CASE("builtin families")
{
    const auto z = builtin_family({"lattice", 1, 1.0, {}, std::nullopt});
    std::vector<VertexId> at5;
    for (const auto& inc : z->neighbors(5)) {
        at5.push_back(inc.other);
    }
    CHECK(at5 == std::vector<VertexId>{4, 6});

    const auto tree = builtin_family({"regular_tree", 2, 1.0, {}, std::nullopt});
    CHECK(tree->neighbors(tree->root()).size() == 2);
    CHECK(tree->neighbors(1).size() == 3);

    const auto z3 = builtin_family({"lattice", 3, 2.5, {}, std::nullopt});
    CHECK(z3->neighbors(z3->root()).size() == 6);

    CHECK_THROWS_AS(builtin_family({"hypercube", 2, 1.0, {}, std::nullopt}), std::invalid_argument);
    CHECK_THROWS_AS(builtin_family({"lattice", 0, 1.0, {}, std::nullopt}), std::invalid_argument);
    CHECK_THROWS_AS(builtin_family({"regular_tree", 0, 1.0, {}, std::nullopt}), std::invalid_argument);
    CHECK_THROWS_AS(builtin_family({"lattice", 2, -1.0, {}, std::nullopt}), std::invalid_argument);
}

TEST_CASE("finite_from_file reads a triangle")
{
    const auto path = std::filesystem::temp_directory_path() / "errw_test_triangle.txt";
    {
        std::ofstream out(path);
        out << "# triangle\ngraph 3\n0 0 1 1\n1 1 2 1\n2 0 2 1\n";
    }
    const auto g = builtin_family({"finite_from_file", 0, 1.0, path, std::nullopt});
    const auto* f = dynamic_cast<const FiniteGraph*>(g.get());
    REQUIRE(f != nullptr);
    CHECK(f->vertex_count() == 3);
    CHECK(f->edge_count() == 3);
    CHECK(f->content_hash() == fixtures::triangle().content_hash());

    const auto heavy = builtin_family({"finite_from_file", 0, 1.0, path, 2.0});
    for (const auto& inc : heavy->neighbors(0)) {
        CHECK(inc.weight == 2.0);
    }
    std::filesystem::remove(path);
    CHECK_THROWS_AS(builtin_family({"finite_from_file", 0, 1.0, path, std::nullopt}), GraphFileError);
}

TEST_CASE("graph file errors carry the line number")
{
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return read_graph(in);
    };
    CHECK_THROWS_WITH_AS(parse("0 0 1 1\n"), doctest::Contains("line 1"), GraphFileError);
    CHECK_THROWS_WITH_AS(parse("graph 2\n0 0 1 -1\n"), doctest::Contains("line 2"), GraphFileError);
    CHECK_THROWS_WITH_AS(parse("graph 2\n0 0 1 1\n0 1 0 1\n"), doctest::Contains("line 3"), GraphFileError);
    CHECK_THROWS_WITH_AS(parse("graph 2\n0 0 5 1\n"), doctest::Contains("out of range"), GraphFileError);
    CHECK_THROWS_WITH_AS(parse("graph 2\n0 0 1 x\n"), doctest::Contains("invalid weight"), GraphFileError);
    CHECK_THROWS_AS(parse(""), GraphFileError);

    const FiniteGraph g = parse("graph 2\n\n3 0 1 0.1\n");
    CHECK(g.edge(3).weight == 0.1);
}

TEST_CASE("graph files round-trip through write_graph")
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const FiniteGraph g = fixtures::random_graph(rng, 5, 7, true);
        std::stringstream buf;
        write_graph(buf, g);
        CHECK(read_graph(buf).content_hash() == g.content_hash());
    }
}

TEST_CASE("FiniteGraph validates its input")
{
    CHECK_THROWS_AS(FiniteGraph({0, 0}, {}, 0), std::invalid_argument);
    CHECK_THROWS_AS(FiniteGraph({0, 1}, {{0, 0, 2, 1.0}}, 0), std::invalid_argument);
    CHECK_THROWS_AS(FiniteGraph({0, 1}, {{0, 0, 1, 0.0}}, 0), std::invalid_argument);
    CHECK_THROWS_AS(FiniteGraph({0, 1}, {{0, 0, 1, 1.0}, {0, 1, 0, 1.0}}, 0), std::invalid_argument);
    const FiniteGraph loop({0}, {{4, 0, 0, 1.0}}, 0);
    CHECK(loop.degree(0) == 1);
}

TEST_CASE("lattice ids round-trip and oracle reports are symmetric")
{
    std::mt19937_64 rng(3);
    for (int dim = 1; dim <= 4; ++dim) {
        LatticeOracle z(dim, 1.0);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<std::int64_t> x(dim);
            for (auto& c : x) {
                c = static_cast<std::int64_t>(rng() % 2001) - 1000;
            }
            const VertexId v = z.encode(x);
            CHECK(z.decode(v) == x);
            const auto nbrs = z.neighbors(v);
            CHECK(nbrs.size() == static_cast<std::size_t>(2 * dim));
            CHECK(z.neighbors(v) == nbrs);
            for (const auto& inc : nbrs) {
                const auto back = z.neighbors(inc.other);
                const auto it = std::find_if(back.begin(), back.end(), [&](const Incidence& b) { return b.edge == inc.edge; });
                REQUIRE(it != back.end());
                CHECK(it->other == v);
                CHECK(it->weight == inc.weight);
            }
        }
    }
}

TEST_CASE("truncation properties on lattices, trees and random graphs")
{
    std::vector<std::shared_ptr<const GraphOracle>> oracles{
        std::make_shared<LatticeOracle>(1, 1.0), std::make_shared<LatticeOracle>(2, 1.0),
        std::make_shared<LatticeOracle>(3, 0.5), std::make_shared<RegularTreeOracle>(2, 1.0),
        std::make_shared<RegularTreeOracle>(3, 2.0)};
    std::mt19937_64 rng(5);
    for (int i = 0; i < 30; ++i) {
        oracles.push_back(std::make_shared<FiniteGraph>(fixtures::random_graph(rng, 7, 12, true)));
    }

    for (const auto& g : oracles) {
        const VertexId o = g->root();
        for (int n = 0; n <= 4; ++n) {
            const Truncation t = truncate(*g, o, n);
            const Truncation next = truncate(*g, o, n + 1);
            const Distances original = ball(*g, o, n + 1);
            CHECK(t.distances == original);

            // Recorded distances equal BFS distances inside G_n for every non-delta vertex.
            const Distances inside = bfs(t.graph, o);
            for (VertexId v : t.graph.vertices()) {
                if (t.delta && v == *t.delta) {
                    CHECK(inside.at(v) == n + 1);
                    continue;
                }
                CHECK(inside.at(v) == original.at(v));
                CHECK(original.at(v) <= n);
            }

            // Edge correspondence recovers weights and endpoints up to identification.
            std::size_t expected_edges = 0;
            std::set<EdgeId> seen;
            for (const auto& [v, d] : original) {
                for (const auto& inc : g->neighbors(v)) {
                    if (original.contains(inc.other) && seen.insert(inc.edge).second) {
                        ++expected_edges;
                    }
                }
            }
            CHECK(t.graph.edge_count() == expected_edges);
            for (const Edge& e : t.graph.edges()) {
                const EdgeId orig = t.edge_to_original.at(e.id);
                bool found = false;
                for (VertexId end : {e.u, e.v}) {
                    if (t.delta && end == *t.delta) {
                        continue;
                    }
                    for (const auto& inc : g->neighbors(end)) {
                        if (inc.edge == orig) {
                            found = true;
                            CHECK(inc.weight == e.weight);
                            CHECK(t.image(inc.other) == e.other(end));
                        }
                    }
                }
                if (t.delta && e.u == *t.delta && e.v == *t.delta) {
                    found = true;  // sphere-sphere edge
                }
                CHECK(found);
                // Nesting: the original edge survives in G_{n+1}.
                CHECK(next.edge_to_original.contains(orig));
            }

            // Incidence order at interior vertices matches the original graph.
            for (VertexId v : t.graph.vertices()) {
                if (t.delta && v == *t.delta) {
                    continue;
                }
                std::vector<EdgeId> a, b;
                for (const auto& inc : t.graph.neighbors(v)) {
                    a.push_back(t.edge_to_original.at(inc.edge));
                }
                for (const auto& inc : g->neighbors(v)) {
                    b.push_back(inc.edge);
                }
                CHECK(a == b);
            }
        }
    }
}

TEST_CASE("truncation requires a nonnegative radius")
{
    CHECK_THROWS_AS(truncate(LatticeOracle(1, 1.0), 0, -1), std::invalid_argument);
    const Truncation t = truncate(LatticeOracle(1, 1.0), 0, 2);
    CHECK(t.image(3) == *t.delta);
    CHECK(t.image(-2) == -2);
    CHECK_THROWS_AS(t.image(10), std::out_of_range);
    CHECK(t.inner_distances().size() == 5);
}
