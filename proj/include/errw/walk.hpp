#pragma once

#include "errw/graph.hpp"
#include "errw/rational.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace errw::walk {

using graph::EdgeId;
using graph::VertexId;

class IsolatedVertex : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InconsistentTrajectory : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EnumerationGuardExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Seeded uniform stream. One draw per step; draws are 53-bit dyadic
/// fractions in [0, 1), so the stream is identical on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

struct Step {
    EdgeId edge = 0;
    VertexId to = 0;

    friend bool operator==(const Step&, const Step&) = default;
};

struct Trajectory {
    VertexId start = 0;
    std::vector<Step> steps;
    bool censored = false;

    std::size_t length() const noexcept { return steps.size(); }
    /// X_t for t in [0, length()].
    VertexId position(std::size_t t) const { return t == 0 ? start : steps.at(t - 1).to; }
};

/// Generic walk state over any oracle. Current weight of e is alpha_e + crossings[e].
struct WalkState {
    VertexId position = 0;
    std::unordered_map<EdgeId, std::uint64_t> crossings;
    std::uint64_t step_count = 0;
    Rng rng;

    WalkState(VertexId start, std::uint64_t seed) : position(start), rng(seed) {}

    std::uint64_t crossings_of(EdgeId e) const
    {
        auto it = crossings.find(e);
        return it == crossings.end() ? 0 : it->second;
    }
};

namespace detail {

/// Index of the incident edge selected by uniform `u`: the first position where
/// the running sum of weights (in incidence order) exceeds u * total.
template <class WeightAt>
std::size_t select_incident(std::size_t degree, const WeightAt& weight_at, double u)
{
    double total = 0.0;
    for (std::size_t i = 0; i < degree; ++i) {
        total += weight_at(i);
    }
    const double target = u * total;
    double running = 0.0;
    for (std::size_t i = 0; i < degree; ++i) {
        running += weight_at(i);
        if (target < running) {
            return i;
        }
    }
    return degree - 1;
}

}  // namespace detail

/// One reinforced step on an arbitrary oracle. `scratch` is reused for the
/// neighbour list. Throws IsolatedVertex at a degree-0 vertex.
Step step(WalkState& state, const graph::GraphOracle& graph, std::vector<graph::Incidence>& scratch);
Step step(WalkState& state, const graph::GraphOracle& graph);

/// Walk on an oracle (typically an infinite graph).
class OracleWalk {
public:
    OracleWalk(const graph::GraphOracle& graph, VertexId start, std::uint64_t seed)
        : graph_(&graph), state_(start, seed)
    {
    }

    Step step() { return walk::step(state_, *graph_, scratch_); }
    VertexId position() const noexcept { return state_.position; }
    std::uint64_t step_count() const noexcept { return state_.step_count; }
    std::uint64_t crossings(EdgeId e) const { return state_.crossings_of(e); }
    const WalkState& state() const noexcept { return state_; }

private:
    const graph::GraphOracle* graph_;
    WalkState state_;
    std::vector<graph::Incidence> scratch_;
};

/// Walk on a finite graph with dense crossing counters. Chooses exactly the
/// same edges as OracleWalk given the same seed and the same incidence lists.
class FiniteWalk {
public:
    FiniteWalk(const graph::FiniteGraph& graph, VertexId start, std::uint64_t seed);

    /// Restart from `start` with fresh weights and a new seed; reuses storage.
    void reset(VertexId start, std::uint64_t seed);
    Step step();

    VertexId position() const { return graph_->vertex_at(position_); }
    std::uint64_t step_count() const noexcept { return step_count_; }
    std::uint64_t crossings(EdgeId e) const;
    /// Materialized generic state (position, crossings, step count).
    WalkState state() const;

private:
    const graph::FiniteGraph* graph_;
    std::uint32_t position_ = 0;
    std::vector<std::uint64_t> crossings_;
    std::vector<std::uint32_t> touched_;
    std::uint64_t step_count_ = 0;
    std::uint64_t seed_ = 0;
    Rng rng_;
};

/// A stopping time value: the step index at which it occurred, or why not.
struct StopTime {
    enum class Status : std::uint8_t { hit, censored, not_applicable };

    Status status = Status::censored;
    std::uint64_t value = 0;

    static StopTime at(std::uint64_t t) { return {Status::hit, t}; }
    static StopTime censored() { return {Status::censored, 0}; }
    static StopTime not_applicable() { return {Status::not_applicable, 0}; }

    bool hit() const noexcept { return status == Status::hit; }
    bool hit_by(std::uint64_t t) const noexcept { return hit() && value <= t; }

    friend bool operator==(const StopTime&, const StopTime&) = default;
};

struct StoppingReport {
    std::vector<StopTime> return_times;  // tau^(1) .. tau^(k)
    StopTime exit_time;                  // T_n
    StopTime absorption_time;            // tau_delta
    std::uint64_t horizon = 0;
    std::uint64_t steps = 0;

    std::size_t returns_seen() const noexcept;
    /// tau^(k) happened (k = number of tracked returns).
    bool reached_all_returns() const noexcept { return returns_seen() == return_times.size(); }
    const StopTime& last_return() const { return return_times.back(); }

    friend bool operator==(const StoppingReport&, const StoppingReport&) = default;
};

/// What to observe along a run.
struct Observation {
    VertexId origin = 0;
    unsigned k = 1;
    /// Radius n for the exit time T_n. `distances` must cover B(n); vertices
    /// missing from it, or with distance > n, lie outside B(n).
    std::optional<int> radius;
    const graph::Distances* distances = nullptr;
    std::optional<VertexId> delta;
};

/// Incrementally fills a StoppingReport from observed positions.
class StoppingTracker {
public:
    StoppingTracker(const Observation& obs, std::uint64_t horizon);

    /// Record X_t = x for t >= 1.
    void observe(std::uint64_t t, VertexId x);
    const StoppingReport& report() const noexcept { return report_; }

private:
    Observation obs_;
    StoppingReport report_;
    std::size_t returns_ = 0;
};

using StopRule = std::function<bool(VertexId, std::uint64_t, const StoppingReport&)>;

inline auto stop_never()
{
    return [](VertexId, std::uint64_t, const StoppingReport&) { return false; };
}

/// Fires once tau^(k) has occurred.
inline auto stop_at_return()
{
    return [](VertexId, std::uint64_t, const StoppingReport& r) { return r.reached_all_returns(); };
}

/// Fires at tau^(k) or at tau_delta, whichever comes first.
inline auto stop_at_return_or_absorption()
{
    return [](VertexId, std::uint64_t, const StoppingReport& r) {
        return r.reached_all_returns() || r.absorption_time.hit();
    };
}

struct RunResult {
    Trajectory trajectory;
    StoppingReport report;
};

/// Steps a fresh walk until `stop` fires or `horizon` steps were taken. The
/// trajectory is censored iff the horizon came first. `Walk` is OracleWalk or
/// FiniteWalk; `Stop` any callable matching StopRule.
template <class Walk, class Stop>
RunResult run(Walk& walk, const Stop& stop, std::uint64_t horizon, const Observation& obs)
{
    if (horizon < 1) {
        throw std::invalid_argument("run: horizon must be at least 1");
    }
    RunResult result;
    result.trajectory.start = walk.position();
    StoppingTracker tracker(obs, horizon);
    bool fired = false;
    for (std::uint64_t t = 1; t <= horizon; ++t) {
        const Step s = walk.step();
        result.trajectory.steps.push_back(s);
        tracker.observe(t, s.to);
        if (stop(s.to, t, tracker.report())) {
            fired = true;
            break;
        }
    }
    result.trajectory.censored = !fired;
    result.report = tracker.report();
    return result;
}

/// Same as run() without recording the trajectory.
template <class Walk, class Stop>
StoppingReport run_unrecorded(Walk& walk, const Stop& stop, std::uint64_t horizon, const Observation& obs)
{
    if (horizon < 1) {
        throw std::invalid_argument("run: horizon must be at least 1");
    }
    StoppingTracker tracker(obs, horizon);
    for (std::uint64_t t = 1; t <= horizon; ++t) {
        const Step s = walk.step();
        tracker.observe(t, s.to);
        if (stop(s.to, t, tracker.report())) {
            break;
        }
    }
    return tracker.report();
}

/// Replays a recorded trajectory through the stopping-time definitions.
StoppingReport stopping_times(const Trajectory& trajectory, const Observation& obs);
StoppingReport stopping_times(const Trajectory& trajectory, VertexId origin, unsigned k, int n,
                              const graph::Distances& distances);

/// Exact probability of the trajectory under the ERRW law on `graph`.
/// Throws InconsistentTrajectory when a step is not an incident edge.
Rational path_probability(const graph::FiniteGraph& graph, const Trajectory& trajectory);

/// Number of length-`length` paths from `start` (saturates at UINT64_MAX).
std::uint64_t count_paths(const graph::FiniteGraph& graph, VertexId start, unsigned length);

using PathVisitor = std::function<void(const Trajectory&, const Rational&)>;

/// Depth-first enumeration of every length-`length` path from `start` with its
/// exact probability. Throws EnumerationGuardExceeded when more than `guard`
/// paths exist.
void enumerate_paths(const graph::FiniteGraph& graph, VertexId start, unsigned length, const PathVisitor& visit,
                     std::uint64_t guard = 10'000'000);

struct CoupledRun {
    RunResult on_graph;       // run on G until tau^(k) or the horizon
    RunResult on_truncation;  // run on G_n until tau^(k), tau_delta or the horizon
    /// First step index at which the two recorded trajectories differ.
    std::optional<std::uint64_t> divergence;
};

/// Drives both walks from one seed. Throws std::invalid_argument when the
/// truncation was not built from `graph` around the same origin.
CoupledRun coupled_run(const graph::GraphOracle& graph, const graph::Truncation& truncation, std::uint64_t seed,
                       unsigned k, std::uint64_t horizon);

/// First index where the trajectories disagree, comparing edges through the
/// truncation's edge correspondence and the arrival vertices as recorded.
std::optional<std::uint64_t> first_divergence(const Trajectory& on_graph, const Trajectory& on_truncation,
                                              const graph::Truncation& truncation);

/// `# seed <s> graph <hash> horizon <h> start <v>` then `<t> <edge_id> <vertex>` per step.
void write_trajectory(std::ostream& out, const Trajectory& trajectory, std::uint64_t seed, std::uint64_t graph_hash,
                      std::uint64_t horizon);

}  // namespace errw::walk
