#pragma once

#include "errw/graph.hpp"
#include "errw/walk.hpp"

#include <random>
#include <vector>

namespace fixtures {

using errw::graph::Edge;
using errw::graph::FiniteGraph;
using errw::graph::VertexId;

inline FiniteGraph triangle(double alpha = 1.0)
{
    return FiniteGraph({0, 1, 2}, {{0, 0, 1, alpha}, {1, 1, 2, alpha}, {2, 0, 2, alpha}}, 0);
}

/// 0 - 1 - 2, started at the end vertex 0.
inline FiniteGraph path3(double alpha = 1.0)
{
    return FiniteGraph({0, 1, 2}, {{0, 0, 1, alpha}, {1, 1, 2, alpha}}, 0);
}

/// Two vertices joined by two parallel edges e = 0 and f = 1.
inline FiniteGraph double_edge(double alpha = 1.0)
{
    return FiniteGraph({0, 1}, {{0, 0, 1, alpha}, {1, 0, 1, alpha}}, 0);
}

inline FiniteGraph single_edge(double alpha = 1.0) { return FiniteGraph({0, 1}, {{0, 0, 1, alpha}}, 0); }

/// Origin 0 with two leaves 1 and 2 (the leaf star seen as a plain graph).
inline FiniteGraph star2(double a = 1.0, double b = 1.0)
{
    return FiniteGraph({0, 1, 2}, {{0, 0, 1, a}, {1, 0, 2, b}}, 0);
}

/// Random connected multigraph on up to `max_vertices` vertices with up to
/// `max_edges` edges; weights drawn from {0.5, 1, 2, 3}.
inline FiniteGraph random_graph(std::mt19937_64& rng, int max_vertices, int max_edges, bool loops)
{
    const double weights[] = {0.5, 1.0, 2.0, 3.0};
    const int nv = 2 + static_cast<int>(rng() % static_cast<unsigned>(max_vertices - 1));
    std::vector<VertexId> vertices;
    for (int i = 0; i < nv; ++i) {
        vertices.push_back(i);
    }
    std::vector<Edge> edges;
    // Spanning path keeps the graph connected.
    for (int i = 1; i < nv; ++i) {
        const VertexId u = static_cast<VertexId>(rng() % static_cast<unsigned>(i));
        edges.push_back({static_cast<int>(edges.size()), u, i, weights[rng() % 4]});
    }
    const int extra = static_cast<int>(rng() % static_cast<unsigned>(std::max(1, max_edges - nv + 2)));
    for (int j = 0; j < extra && static_cast<int>(edges.size()) < max_edges; ++j) {
        VertexId u = static_cast<VertexId>(rng() % nv);
        VertexId v = static_cast<VertexId>(rng() % nv);
        if (u == v && !loops) {
            v = (u + 1) % nv;
        }
        edges.push_back({static_cast<int>(edges.size()) * 3 + 7, u, v, weights[rng() % 4]});
    }
    return FiniteGraph(vertices, edges, 0);
}

inline errw::walk::Trajectory make_path(VertexId start, std::vector<errw::walk::Step> steps)
{
    errw::walk::Trajectory t;
    t.start = start;
    t.steps = std::move(steps);
    return t;
}

}  // namespace fixtures
