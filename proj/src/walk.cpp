#include "errw/walk.hpp"

#include <algorithm>
#include <limits>
#include <ostream>

namespace errw::walk {

Step step(WalkState& state, const graph::GraphOracle& graph, std::vector<graph::Incidence>& scratch)
{
    graph.neighbors(state.position, scratch);
    if (scratch.empty()) {
        throw IsolatedVertex("step: vertex " + std::to_string(state.position) + " has no incident edge");
    }
    thread_local std::vector<double> weights;
    weights.clear();
    for (const auto& inc : scratch) {
        weights.push_back(inc.weight + static_cast<double>(state.crossings_of(inc.edge)));
    }
    const std::size_t i =
        detail::select_incident(weights.size(), [&](std::size_t j) { return weights[j]; }, state.rng.uniform());
    const graph::Incidence& chosen = scratch[i];
    ++state.crossings[chosen.edge];
    ++state.step_count;
    state.position = chosen.other;
    return {chosen.edge, chosen.other};
}

Step step(WalkState& state, const graph::GraphOracle& graph)
{
    std::vector<graph::Incidence> scratch;
    return step(state, graph, scratch);
}

// FiniteWalk

FiniteWalk::FiniteWalk(const graph::FiniteGraph& graph, VertexId start, std::uint64_t seed)
    : graph_(&graph), crossings_(graph.edge_count(), 0), rng_(seed)
{
    position_ = graph_->index_of(start);
    seed_ = seed;
}

void FiniteWalk::reset(VertexId start, std::uint64_t seed)
{
    for (std::uint32_t e : touched_) {
        crossings_[e] = 0;
    }
    touched_.clear();
    position_ = graph_->index_of(start);
    step_count_ = 0;
    seed_ = seed;
    rng_ = Rng(seed);
}

Step FiniteWalk::step()
{
    const auto arcs = graph_->arcs(position_);
    if (arcs.empty()) {
        throw IsolatedVertex("step: vertex " + std::to_string(position()) + " has no incident edge");
    }
    const auto edges = graph_->edges();
    const std::size_t i = detail::select_incident(
        arcs.size(),
        [&](std::size_t j) {
            const auto e = arcs[j].edge_index;
            return edges[e].weight + static_cast<double>(crossings_[e]);
        },
        rng_.uniform());
    const auto& arc = arcs[i];
    if (crossings_[arc.edge_index]++ == 0) {
        touched_.push_back(arc.edge_index);
    }
    ++step_count_;
    position_ = arc.other_index;
    return {edges[arc.edge_index].id, graph_->vertex_at(position_)};
}

std::uint64_t FiniteWalk::crossings(EdgeId e) const
{
    auto idx = graph_->edge_index_of(e);
    return idx ? crossings_[*idx] : 0;
}

WalkState FiniteWalk::state() const
{
    WalkState s(position(), seed_);
    s.step_count = step_count_;
    for (std::uint32_t e : touched_) {
        s.crossings.emplace(graph_->edges()[e].id, crossings_[e]);
    }
    return s;
}

// Stopping times

std::size_t StoppingReport::returns_seen() const noexcept
{
    return static_cast<std::size_t>(
        std::count_if(return_times.begin(), return_times.end(), [](const StopTime& s) { return s.hit(); }));
}

StoppingTracker::StoppingTracker(const Observation& obs, std::uint64_t horizon) : obs_(obs)
{
    if (obs.k < 1) {
        throw std::invalid_argument("stopping times: k must be at least 1");
    }
    if (obs.radius && !obs.distances) {
        throw std::invalid_argument("stopping times: a radius needs distances");
    }
    report_.return_times.assign(obs.k, StopTime::censored());
    report_.exit_time = obs.radius ? StopTime::censored() : StopTime::not_applicable();
    report_.absorption_time = obs.delta ? StopTime::censored() : StopTime::not_applicable();
    report_.horizon = horizon;
}

void StoppingTracker::observe(std::uint64_t t, VertexId x)
{
    report_.steps = t;
    if (x == obs_.origin && returns_ < report_.return_times.size()) {
        report_.return_times[returns_++] = StopTime::at(t);
    }
    if (obs_.radius && !report_.exit_time.hit()) {
        auto it = obs_.distances->find(x);
        if (it == obs_.distances->end() || it->second > *obs_.radius) {
            report_.exit_time = StopTime::at(t);
        }
    }
    if (obs_.delta && x == *obs_.delta && !report_.absorption_time.hit()) {
        report_.absorption_time = StopTime::at(t);
    }
}

StoppingReport stopping_times(const Trajectory& trajectory, const Observation& obs)
{
    StoppingTracker tracker(obs, trajectory.length());
    for (std::size_t t = 1; t <= trajectory.length(); ++t) {
        tracker.observe(t, trajectory.steps[t - 1].to);
    }
    return tracker.report();
}

StoppingReport stopping_times(const Trajectory& trajectory, VertexId origin, unsigned k, int n,
                              const graph::Distances& distances)
{
    Observation obs;
    obs.origin = origin;
    obs.k = k;
    obs.radius = n;
    obs.distances = &distances;
    return stopping_times(trajectory, obs);
}

// Exact path probabilities

namespace {

std::vector<Rational> exact_weights(const graph::FiniteGraph& g)
{
    std::vector<Rational> w;
    w.reserve(g.edge_count());
    for (const auto& e : g.edges()) {
        w.push_back(to_rational(e.weight));
    }
    return w;
}

}  // namespace

Rational path_probability(const graph::FiniteGraph& graph, const Trajectory& trajectory)
{
    if (!graph.contains(trajectory.start)) {
        throw InconsistentTrajectory("path_probability: start vertex is not in the graph");
    }
    const std::vector<Rational> alpha = exact_weights(graph);
    std::vector<std::uint64_t> crossings(graph.edge_count(), 0);
    std::uint32_t position = graph.index_of(trajectory.start);
    Rational probability = 1;
    for (std::size_t t = 0; t < trajectory.length(); ++t) {
        const Step& s = trajectory.steps[t];
        const auto arcs = graph.arcs(position);
        Rational total = 0;
        const graph::FiniteGraph::Arc* chosen = nullptr;
        for (const auto& arc : arcs) {
            total += alpha[arc.edge_index] + crossings[arc.edge_index];
            if (graph.edges()[arc.edge_index].id == s.edge && graph.vertex_at(arc.other_index) == s.to) {
                chosen = &arc;
            }
        }
        if (!chosen) {
            throw InconsistentTrajectory("path_probability: step " + std::to_string(t + 1) + " uses edge "
                                         + std::to_string(s.edge) + " which does not lead from "
                                         + std::to_string(graph.vertex_at(position)) + " to "
                                         + std::to_string(s.to));
        }
        probability *= (alpha[chosen->edge_index] + crossings[chosen->edge_index]) / total;
        ++crossings[chosen->edge_index];
        position = chosen->other_index;
    }
    return probability;
}

std::uint64_t count_paths(const graph::FiniteGraph& graph, VertexId start, unsigned length)
{
    constexpr auto cap = std::numeric_limits<std::uint64_t>::max();
    std::vector<std::uint64_t> current(graph.vertex_count(), 0), next(graph.vertex_count(), 0);
    current[graph.index_of(start)] = 1;
    for (unsigned step = 0; step < length; ++step) {
        std::fill(next.begin(), next.end(), 0);
        for (std::uint32_t v = 0; v < current.size(); ++v) {
            if (current[v] == 0) {
                continue;
            }
            for (const auto& arc : graph.arcs(v)) {
                auto& slot = next[arc.other_index];
                slot = cap - slot < current[v] ? cap : slot + current[v];
            }
        }
        std::swap(current, next);
    }
    std::uint64_t total = 0;
    for (auto c : current) {
        total = cap - total < c ? cap : total + c;
    }
    return total;
}

namespace {

struct Enumerator {
    const graph::FiniteGraph& graph;
    const std::vector<Rational>& alpha;
    const PathVisitor& visit;
    unsigned length;
    std::vector<std::uint64_t> crossings;
    Trajectory path;

    void descend(std::uint32_t position, const Rational& probability)
    {
        if (path.steps.size() == length) {
            visit(path, probability);
            return;
        }
        const auto arcs = graph.arcs(position);
        Rational total = 0;
        for (const auto& arc : arcs) {
            total += alpha[arc.edge_index] + crossings[arc.edge_index];
        }
        for (const auto& arc : arcs) {
            const Rational p = probability * (alpha[arc.edge_index] + crossings[arc.edge_index]) / total;
            ++crossings[arc.edge_index];
            path.steps.push_back({graph.edges()[arc.edge_index].id, graph.vertex_at(arc.other_index)});
            descend(arc.other_index, p);
            path.steps.pop_back();
            --crossings[arc.edge_index];
        }
    }
};

}  // namespace

void enumerate_paths(const graph::FiniteGraph& graph, VertexId start, unsigned length, const PathVisitor& visit,
                     std::uint64_t guard)
{
    const std::uint64_t count = count_paths(graph, start, length);
    if (count > guard) {
        throw EnumerationGuardExceeded("enumerate_paths: " + std::to_string(count) + " paths of length "
                                       + std::to_string(length) + " exceed the guard of " + std::to_string(guard));
    }
    const std::vector<Rational> alpha = exact_weights(graph);
    Enumerator e{graph, alpha, visit, length, std::vector<std::uint64_t>(graph.edge_count(), 0), {}};
    e.path.start = start;
    e.descend(graph.index_of(start), Rational(1));
}

// Coupling

std::optional<std::uint64_t> first_divergence(const Trajectory& on_graph, const Trajectory& on_truncation,
                                              const graph::Truncation& truncation)
{
    const std::size_t common = std::min(on_graph.length(), on_truncation.length());
    for (std::size_t i = 0; i < common; ++i) {
        const Step& a = on_graph.steps[i];
        const Step& b = on_truncation.steps[i];
        const auto mapped = truncation.edge_to_original.find(b.edge);
        if (mapped == truncation.edge_to_original.end() || mapped->second != a.edge || a.to != b.to) {
            return i + 1;
        }
    }
    return std::nullopt;
}

CoupledRun coupled_run(const graph::GraphOracle& graph, const graph::Truncation& truncation, std::uint64_t seed,
                       unsigned k, std::uint64_t horizon)
{
    const VertexId o = truncation.origin;
    auto original = graph.neighbors(o);
    auto truncated = truncation.graph.neighbors(o);
    const bool same_star = original.size() == truncated.size()
                           && std::equal(original.begin(), original.end(), truncated.begin(),
                                         [](const graph::Incidence& x, const graph::Incidence& y) {
                                             return x.edge == y.edge && x.weight == y.weight;
                                         });
    if (!same_star) {
        throw std::invalid_argument("coupled_run: truncation does not match the graph at the origin");
    }

    Observation on_g;
    on_g.origin = o;
    on_g.k = k;
    on_g.radius = truncation.radius;
    on_g.distances = &truncation.distances;

    Observation on_gn = on_g;
    on_gn.delta = truncation.delta;

    CoupledRun result;
    OracleWalk walk_g(graph, o, seed);
    result.on_graph = run(walk_g, stop_at_return(), horizon, on_g);
    FiniteWalk walk_gn(truncation.graph, o, seed);
    result.on_truncation = run(walk_gn, stop_at_return_or_absorption(), horizon, on_gn);
    result.divergence = first_divergence(result.on_graph.trajectory, result.on_truncation.trajectory, truncation);
    return result;
}

void write_trajectory(std::ostream& out, const Trajectory& trajectory, std::uint64_t seed, std::uint64_t graph_hash,
                      std::uint64_t horizon)
{
    char hash[24];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(graph_hash));
    out << "# seed " << seed << " graph " << hash << " horizon " << horizon << " start " << trajectory.start
        << (trajectory.censored ? " censored" : "") << '\n';
    for (std::size_t t = 0; t < trajectory.length(); ++t) {
        out << (t + 1) << ' ' << trajectory.steps[t].edge << ' ' << trajectory.steps[t].to << '\n';
    }
}

}  // namespace errw::walk
