#include "errw/walk.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <map>
#include <random>
#include <sstream>

using namespace errw;
using namespace errw::walk;
using graph::FiniteGraph;
using graph::LatticeOracle;

namespace {

/// Observed frequency of choosing each incident slot at a fresh vertex.
std::vector<double> first_step_frequencies(const FiniteGraph& g, VertexId v, int draws)
{
    std::vector<double> freq(g.degree(v), 0.0);
    const auto nbrs = g.neighbors(v);
    for (int i = 0; i < draws; ++i) {
        FiniteWalk w(g, v, static_cast<std::uint64_t>(i) * 2654435761u + 1);
        const Step s = w.step();
        for (std::size_t j = 0; j < nbrs.size(); ++j) {
            if (nbrs[j].edge == s.edge) {
                freq[j] += 1.0 / draws;
            }
        }
    }
    return freq;
}

Observation returns_only(VertexId o, unsigned k)
{
    Observation obs;
    obs.origin = o;
    obs.k = k;
    return obs;
}

}  // namespace

TEST_CASE("select_incident maps the uniform through cumulative weights")
{
    const std::vector<double> w{1.0, 3.0};
    auto at = [&](std::size_t i) { return w[i]; };
    CHECK(detail::select_incident(2, at, 0.0) == 0);
    CHECK(detail::select_incident(2, at, 0.2499) == 0);
    CHECK(detail::select_incident(2, at, 0.25) == 1);
    CHECK(detail::select_incident(2, at, 0.9999999) == 1);
}

TEST_CASE("step choice probabilities follow the weights")
{
    const FiniteGraph g = fixtures::star2(1.0, 3.0);
    const auto freq = first_step_frequencies(g, 0, 40000);
    // Binomial SE at 40000 draws is about 0.002.
    CHECK(freq[0] == doctest::Approx(0.25).epsilon(0.04));
    CHECK(freq[1] == doctest::Approx(0.75).epsilon(0.02));

    LatticeOracle z(1, 1.0);
    int right = 0;
    const int draws = 40000;
    for (int i = 0; i < draws; ++i) {
        OracleWalk w(z, 0, static_cast<std::uint64_t>(i) + 17);
        right += w.step().to == 1;
    }
    CHECK(static_cast<double>(right) / draws == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("a traversed edge gains one unit of weight")
{
    const FiniteGraph g = fixtures::single_edge();
    FiniteWalk w(g, 0, 1);
    CHECK(w.crossings(0) == 0);
    const Step s = w.step();
    CHECK(s == Step{0, 1});
    CHECK(w.crossings(0) == 1);
    CHECK(g.edge(0).weight + static_cast<double>(w.crossings(0)) == 2.0);

    WalkState st(0, 1);
    step(st, g);
    CHECK(st.crossings_of(0) == 1);
    CHECK(st.position == 1);
    CHECK(st.step_count == 1);
}

TEST_CASE("isolated vertices are a hard error")
{
    const FiniteGraph lonely({0, 1}, {{0, 1, 1, 1.0}}, 0);
    FiniteWalk w(lonely, 0, 3);
    CHECK_THROWS_AS(w.step(), IsolatedVertex);
    OracleWalk ow(lonely, 0, 3);
    CHECK_THROWS_AS(ow.step(), IsolatedVertex);
}

TEST_CASE("self-loops keep the position and count once")
{
    const FiniteGraph g({0}, {{9, 0, 0, 1.0}}, 0);
    FiniteWalk w(g, 0, 5);
    for (int i = 0; i < 4; ++i) {
        CHECK(w.step() == Step{9, 0});
    }
    CHECK(w.crossings(9) == 4);
}

TEST_CASE("absorption on the triangle truncation is immediate")
{
    const auto t = graph::truncate(fixtures::triangle(), 0, 0);
    Observation obs = returns_only(0, 1);
    obs.delta = t.delta;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        FiniteWalk w(t.graph, 0, seed);
        const auto r = run(
            w, [&](VertexId x, std::uint64_t, const StoppingReport&) { return x == *t.delta; }, 50, obs);
        CHECK(r.report.absorption_time == StopTime::at(1));
        CHECK(r.trajectory.length() == 1);
        CHECK_FALSE(r.trajectory.censored);
    }
}

TEST_CASE("a first move to the leaf forces the first return at step 2")
{
    const FiniteGraph g = fixtures::star2();
    int leaf_first = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        FiniteWalk w(g, 0, seed);
        const auto r = run(w, stop_at_return(), 100, returns_only(0, 1));
        REQUIRE(r.trajectory.length() == 2);
        CHECK(r.report.return_times[0] == StopTime::at(2));
        leaf_first += r.trajectory.position(1) == 1;
    }
    CHECK(leaf_first > 0);
}

TEST_CASE("horizon handling")
{
    LatticeOracle z(1, 1.0);
    OracleWalk w(z, 0, 8);
    const auto r = run(w, stop_never(), 1, returns_only(0, 1));
    CHECK(r.trajectory.length() == 1);
    CHECK(r.trajectory.censored);
    CHECK(r.report.return_times[0] == StopTime::censored());
    CHECK(r.report.exit_time == StopTime::not_applicable());
    CHECK(r.report.absorption_time == StopTime::not_applicable());
    CHECK(r.report.horizon == 1);

    OracleWalk w2(z, 0, 8);
    CHECK_THROWS_AS(run(w2, stop_never(), 0, returns_only(0, 1)), std::invalid_argument);
}

TEST_CASE("stopping times read off a recorded trajectory")
{
    // 0 -> 1 -> 0 -> -1 -> 0 on Z; edge ids as in LatticeOracle(1).
    const Trajectory path = fixtures::make_path(0, {{0, 1}, {0, 0}, {-1, -1}, {-1, 0}});
    const graph::Distances d = graph::ball(LatticeOracle(1, 1.0), 0, 3);

    const auto r = stopping_times(path, 0, 2, 0, d);
    CHECK(r.return_times == std::vector<StopTime>{StopTime::at(2), StopTime::at(4)});
    CHECK(r.exit_time == StopTime::at(1));

    CHECK(stopping_times(path, 0, 3, 1, d).return_times[2] == StopTime::censored());
    CHECK(stopping_times(path, 0, 1, 1, d).exit_time == StopTime::censored());

    const Trajectory away = fixtures::make_path(0, {{0, 1}, {1, 2}, {2, 3}});
    const auto r2 = stopping_times(away, 0, 1, 2, d);
    CHECK(r2.return_times[0] == StopTime::censored());
    CHECK(r2.exit_time == StopTime::at(3));

    // Distances that stop short of a vertex place it outside the ball.
    const graph::Distances small{{0, 0}, {1, 1}};
    CHECK(stopping_times(away, 0, 1, 5, small).exit_time == StopTime::at(2));

    Observation bad;
    bad.radius = 1;
    CHECK_THROWS_AS(stopping_times(path, bad), std::invalid_argument);
    CHECK_THROWS_AS(stopping_times(path, 0, 0, 1, d), std::invalid_argument);
}

TEST_CASE("path probability examples")
{
    const auto t = graph::truncate(LatticeOracle(1, 1.0), 0, 4);
    const FiniteGraph& g = t.graph;

    CHECK(path_probability(g, fixtures::make_path(0, {{0, 1}, {0, 0}})) == Rational(1, 3));

    Rational total = 0;
    std::vector<Rational> each;
    enumerate_paths(g, 0, 2, [&](const Trajectory&, const Rational& p) {
        total += p;
        each.push_back(p);
    });
    CHECK(each.size() == 4);
    CHECK(total == 1);
    std::sort(each.begin(), each.end());
    CHECK(each == std::vector<Rational>{Rational(1, 6), Rational(1, 6), Rational(1, 3), Rational(1, 3)});

    // Single steps from a vertex of degree d with equal weights.
    const FiniteGraph tri = fixtures::triangle(2.5);
    for (const auto& inc : tri.neighbors(1)) {
        CHECK(path_probability(tri, fixtures::make_path(1, {{inc.edge, inc.other}})) == Rational(1, 2));
    }
    const auto z3 = graph::truncate(LatticeOracle(3, 1.0), LatticeOracle(3, 1.0).root(), 2);
    for (const auto& inc : z3.graph.neighbors(z3.origin)) {
        CHECK(path_probability(z3.graph, fixtures::make_path(z3.origin, {{inc.edge, inc.other}})) == Rational(1, 6));
    }

    // Non-dyadic weights are handled exactly.
    const FiniteGraph s = fixtures::star2(0.1, 0.2);
    CHECK(path_probability(s, fixtures::make_path(0, {{0, 1}}))
          == to_rational(0.1) / (to_rational(0.1) + to_rational(0.2)));
}

TEST_CASE("path probability rejects inconsistent trajectories")
{
    const FiniteGraph g = fixtures::path3();
    CHECK_THROWS_AS(path_probability(g, fixtures::make_path(0, {{1, 2}})), InconsistentTrajectory);
    CHECK_THROWS_AS(path_probability(g, fixtures::make_path(0, {{0, 2}})), InconsistentTrajectory);
    CHECK_THROWS_AS(path_probability(g, fixtures::make_path(7, {})), InconsistentTrajectory);
    CHECK(path_probability(g, fixtures::make_path(0, {})) == 1);
}

TEST_CASE("enumeration guard")
{
    const FiniteGraph g = fixtures::triangle();
    CHECK(count_paths(g, 0, 10) == 1024);
    CHECK_THROWS_AS(enumerate_paths(g, 0, 10, [](const Trajectory&, const Rational&) {}, 1000),
                    EnumerationGuardExceeded);
    const FiniteGraph loops({0}, {{0, 0, 0, 1.0}, {1, 0, 0, 1.0}}, 0);
    CHECK(count_paths(loops, 0, 70) == std::numeric_limits<std::uint64_t>::max());
}

TEST_CASE("path probabilities sum to one on small graphs")
{
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 60; ++trial) {
        const FiniteGraph g = fixtures::random_graph(rng, 4, 5, true);
        for (unsigned length = 0; length <= 6; ++length) {
            Rational total = 0;
            std::uint64_t paths = 0;
            enumerate_paths(g, g.root(), length, [&](const Trajectory& t, const Rational& p) {
                total += p;
                ++paths;
                CHECK(p > 0);
                if (length == 6 && paths % 97 == 0) {
                    CHECK(path_probability(g, t) == p);
                }
            });
            CHECK(total == 1);
            CHECK(paths == count_paths(g, g.root(), length));
        }
    }
}

TEST_CASE("weight bookkeeping and incidence consistency after runs")
{
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        const FiniteGraph g = fixtures::random_graph(rng, 6, 9, true);
        FiniteWalk w(g, g.root(), rng());
        const auto r = run(w, stop_never(), 1 + rng() % 200, returns_only(g.root(), 1));

        std::map<EdgeId, std::uint64_t> seen;
        VertexId at = r.trajectory.start;
        for (const Step& s : r.trajectory.steps) {
            ++seen[s.edge];
            const auto& e = g.edge(s.edge);
            CHECK((e.u == at || e.v == at));
            CHECK(s.to == e.other(at));
            at = s.to;
        }
        std::uint64_t total = 0;
        const WalkState st = w.state();
        for (const auto& e : g.edges()) {
            const auto expected = seen.contains(e.id) ? seen.at(e.id) : 0;
            CHECK(w.crossings(e.id) == expected);
            CHECK(st.crossings_of(e.id) == expected);
            total += w.crossings(e.id);
        }
        CHECK(total == r.trajectory.length());
        CHECK(st.step_count == r.trajectory.length());
        CHECK(st.position == at);
    }
}

TEST_CASE("OracleWalk and FiniteWalk agree and runs are deterministic")
{
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 30; ++trial) {
        const FiniteGraph g = fixtures::random_graph(rng, 6, 10, true);
        const std::uint64_t seed = rng();
        FiniteWalk fw(g, g.root(), seed);
        OracleWalk ow(g, g.root(), seed);
        const auto a = run(fw, stop_never(), 300, returns_only(g.root(), 3));
        const auto b = run(ow, stop_never(), 300, returns_only(g.root(), 3));
        CHECK(a.trajectory.steps == b.trajectory.steps);
        CHECK(a.report == b.report);

        fw.reset(g.root(), seed);
        const auto c = run(fw, stop_never(), 300, returns_only(g.root(), 3));
        CHECK(c.trajectory.steps == a.trajectory.steps);
        CHECK(c.report == a.report);
    }
}

TEST_CASE("return times increase and T_n is at least n")
{
    LatticeOracle z2(2, 1.0);
    const VertexId o = z2.root();
    for (int n : {0, 1, 3, 6}) {
        const auto d = graph::ball(z2, o, n + 1);
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            OracleWalk w(z2, o, seed);
            Observation obs = returns_only(o, 4);
            obs.radius = n;
            obs.distances = &d;
            const auto r = run(w, stop_never(), 2000, obs);
            std::uint64_t prev = 0;
            for (const auto& t : r.report.return_times) {
                if (t.hit()) {
                    CHECK(t.value > prev);
                    prev = t.value;
                }
            }
            if (r.report.exit_time.hit()) {
                CHECK(r.report.exit_time.value >= static_cast<std::uint64_t>(n));
                CHECK(r.report.exit_time.value >= static_cast<std::uint64_t>(n + 1));
            }
            CHECK(stopping_times(r.trajectory, obs) == r.report);
        }
    }
}

TEST_CASE("coupled runs agree up to the exit time")
{
    LatticeOracle z(1, 1.0);
    const auto t3 = graph::truncate(z, 0, 3);
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const auto c = coupled_run(z, t3, seed, 3, 500);
        const auto& exit = c.on_graph.report.exit_time;
        const auto& absorb = c.on_truncation.report.absorption_time;
        if (exit.hit() || absorb.hit()) {
            // Within the horizon, both happen at the same step unless the G
            // walk was stopped by tau^(k) first.
            if (exit.hit() && absorb.hit()) {
                CHECK(exit.value == absorb.value);
            }
        }
        const std::size_t common = std::min(c.on_graph.trajectory.length(), c.on_truncation.trajectory.length());
        if (c.divergence) {
            REQUIRE(exit.hit());
            CHECK(*c.divergence == exit.value);
            CHECK(absorb == exit);
        } else {
            for (std::size_t i = 0; i < common; ++i) {
                CHECK(c.on_graph.trajectory.steps[i] == c.on_truncation.trajectory.steps[i]);
            }
        }
        // Return indicators before exit coincide.
        for (unsigned j = 0; j < 3; ++j) {
            const auto& rg = c.on_graph.report.return_times[j];
            const auto& rn = c.on_truncation.report.return_times[j];
            const bool before_g = rg.hit() && (!exit.hit() || rg.value < exit.value);
            const bool before_n = rn.hit() && (!absorb.hit() || rn.value < absorb.value);
            CHECK(before_g == before_n);
        }
    }
}

TEST_CASE("coupling on a finite graph past its diameter is exact")
{
    const FiniteGraph g = fixtures::path3();
    const auto t = graph::truncate(g, 0, 2);
    REQUIRE_FALSE(t.delta.has_value());
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto c = coupled_run(g, t, seed, 5, 200);
        CHECK_FALSE(c.divergence.has_value());
        CHECK(c.on_graph.trajectory.steps == c.on_truncation.trajectory.steps);
    }
}

TEST_CASE("coupling on Z^2 never diverges before T_n")
{
    LatticeOracle z2(2, 1.0);
    const auto t5 = graph::truncate(z2, z2.root(), 5);
    int exits = 0;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        const auto c = coupled_run(z2, t5, seed, 1, 5000);
        const auto& exit = c.on_graph.report.exit_time;
        if (c.divergence) {
            REQUIRE(exit.hit());
            CHECK(*c.divergence == exit.value);
        }
        exits += exit.hit();
    }
    CHECK(exits > 0);
}

TEST_CASE("coupled_run rejects a foreign truncation")
{
    LatticeOracle z(1, 1.0);
    const auto other = graph::truncate(fixtures::path3(), 0, 1);
    CHECK_THROWS_AS(coupled_run(z, other, 1, 1, 10), std::invalid_argument);
}

TEST_CASE("sphere loops do not change stopped trajectories")
{
    std::mt19937_64 rng(31);
    std::vector<std::shared_ptr<const graph::GraphOracle>> graphs{
        std::make_shared<FiniteGraph>(fixtures::triangle()),
        std::make_shared<graph::RegularTreeOracle>(2, 1.0),
    };
    for (int i = 0; i < 25; ++i) {
        graphs.push_back(std::make_shared<FiniteGraph>(fixtures::random_graph(rng, 8, 14, true)));
    }
    int with_loops = 0;
    for (const auto& g : graphs) {
        for (int n = 0; n <= 2; ++n) {
            const auto kept = graph::truncate(*g, g->root(), n);
            const auto dropped = graph::truncate(*g, g->root(), n, {.keep_sphere_edges = false});
            with_loops += kept.graph.edge_count() != dropped.graph.edge_count();
            Observation obs = returns_only(g->root(), 2);
            obs.delta = kept.delta;
            for (std::uint64_t seed = 0; seed < 50; ++seed) {
                FiniteWalk a(kept.graph, g->root(), seed);
                FiniteWalk b(dropped.graph, g->root(), seed);
                const auto ra = run(a, stop_at_return_or_absorption(), 400, obs);
                const auto rb = run(b, stop_at_return_or_absorption(), 400, obs);
                CHECK(ra.trajectory.steps == rb.trajectory.steps);
                CHECK(ra.report == rb.report);
            }
        }
    }
    CHECK(with_loops > 0);
}

TEST_CASE("trajectory dump format")
{
    const Trajectory t = fixtures::make_path(0, {{0, 1}, {0, 0}});
    std::ostringstream out;
    write_trajectory(out, t, 42, 0xabcULL, 10);
    CHECK(out.str() == "# seed 42 graph 0000000000000abc horizon 10 start 0\n1 0 1\n2 0 0\n");

    Trajectory c = t;
    c.censored = true;
    std::ostringstream out2;
    write_trajectory(out2, c, 1, 0, 2);
    CHECK(out2.str().starts_with("# seed 1 graph 0000000000000000 horizon 2 start 0 censored\n"));
}
