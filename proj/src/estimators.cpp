#include "errw/estimators.hpp"

#include <array>
#include <climits>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace errw::estimators {

namespace {

void require_positive(std::uint64_t value, const char* name)
{
    if (value < 1) {
        throw std::invalid_argument(std::string(name) + " must be at least 1");
    }
}

std::uint64_t trials_for(const Estimate& e)
{
    return e.convention == Convention::over_all_samples ? e.samples : e.samples - e.censored;
}

}  // namespace

double Estimate::standard_error() const
{
    const auto n = trials_for(*this);
    return n == 0 ? 0.0 : std::sqrt(point * (1.0 - point) / static_cast<double>(n));
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z)
{
    if (trials == 0) {
        return {0.0, 1.0};
    }
    if (successes > trials) {
        throw std::invalid_argument("wilson_interval: more successes than trials");
    }
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    return {std::clamp(std::min(center - half, p), 0.0, 1.0), std::clamp(std::max(center + half, p), 0.0, 1.0)};
}

Estimate tally(const std::vector<Outcome>& outcomes, std::uint64_t master_seed, Convention convention, double z)
{
    Estimate e;
    e.samples = outcomes.size();
    e.master_seed = master_seed;
    e.convention = convention;
    for (Outcome o : outcomes) {
        e.successes += o == Outcome::success;
        e.censored += o == Outcome::censored;
    }
    const auto n = trials_for(e);
    e.point = n == 0 ? 0.0 : static_cast<double>(e.successes) / static_cast<double>(n);
    const Interval ci = wilson_interval(e.successes, n, z);
    e.ci_low = ci.low;
    e.ci_high = ci.high;
    return e;
}

unsigned worker_count()
{
    if (const char* env = std::getenv("ERRW_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) {
            return static_cast<unsigned>(v);
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Absorbed return

std::vector<Outcome> absorbed_return_outcomes(const AbsorbingTarget& target, unsigned k, std::uint64_t samples,
                                              std::uint64_t seed, std::uint64_t horizon)
{
    require_positive(k, "k");
    require_positive(samples, "samples");
    if (!target.graph) {
        throw std::invalid_argument("absorbed return: missing graph");
    }
    walk::Observation obs;
    obs.origin = target.origin;
    obs.k = k;
    obs.delta = target.delta;

    std::vector<Outcome> outcomes(samples);
    for_each_replica(
        samples, worker_count(), [&] { return walk::FiniteWalk(*target.graph, target.origin, 0); },
        [&](walk::FiniteWalk& w, std::uint64_t i) {
            w.reset(target.origin, replica_seed(seed, i));
            const auto r = walk::run_unrecorded(w, walk::stop_at_return_or_absorption(), horizon, obs);
            outcomes[i] = r.reached_all_returns() ? Outcome::success
                          : r.absorption_time.hit() ? Outcome::failure
                                                    : Outcome::censored;
        });
    return outcomes;
}

Estimate estimate_absorbed_return(const AbsorbingTarget& target, unsigned k, std::uint64_t samples,
                                  std::uint64_t seed, std::uint64_t horizon, double z)
{
    return tally(absorbed_return_outcomes(target, k, samples, seed, horizon), seed, Convention::over_all_samples, z);
}

Estimate estimate_absorbed_return(const graph::Truncation& truncation, unsigned k, std::uint64_t samples,
                                  std::uint64_t seed, double z)
{
    return estimate_absorbed_return(AbsorbingTarget::of(truncation), k, samples, seed, safety_horizon, z);
}

// Return by horizon

namespace {

template <class MakeWalk>
std::vector<Outcome> horizon_outcomes(const MakeWalk& make_walk, VertexId origin, unsigned k, std::uint64_t horizon,
                                      std::uint64_t samples, std::uint64_t seed)
{
    walk::Observation obs;
    obs.origin = origin;
    obs.k = k;
    std::vector<Outcome> outcomes(samples);
    for_each_replica(
        samples, worker_count(), [] { return 0; },
        [&](int, std::uint64_t i) {
            auto w = make_walk(replica_seed(seed, i));
            const auto r = walk::run_unrecorded(w, walk::stop_at_return(), horizon, obs);
            outcomes[i] = r.reached_all_returns() ? Outcome::success : Outcome::censored;
        });
    return outcomes;
}

}  // namespace

std::vector<Outcome> return_by_horizon_outcomes(const graph::GraphOracle& graph, VertexId origin, unsigned k,
                                                std::uint64_t horizon, std::uint64_t samples, std::uint64_t seed)
{
    require_positive(k, "k");
    require_positive(samples, "samples");
    require_positive(horizon, "horizon");
    if (const auto* finite = dynamic_cast<const graph::FiniteGraph*>(&graph)) {
        return horizon_outcomes([&](std::uint64_t s) { return walk::FiniteWalk(*finite, origin, s); }, origin, k,
                                horizon, samples, seed);
    }
    return horizon_outcomes([&](std::uint64_t s) { return walk::OracleWalk(graph, origin, s); }, origin, k, horizon,
                            samples, seed);
}

Estimate estimate_return_by_horizon(const graph::GraphOracle& graph, VertexId origin, unsigned k,
                                    std::uint64_t horizon, std::uint64_t samples, std::uint64_t seed, double z)
{
    return tally(return_by_horizon_outcomes(graph, origin, k, horizon, samples, seed), seed,
                 Convention::over_all_samples, z);
}

// Truncation gap

bool GapSweep::consistent() const
{
    return tail_monotonicity_violations == 0
           && std::all_of(rows.begin(), rows.end(), [](const GapRow& r) { return r.consistent(); });
}

GapSweep truncation_gap_sweep(const graph::GraphOracle& graph, VertexId origin, const std::vector<int>& n_list,
                              unsigned k, std::uint64_t horizon, std::uint64_t samples, std::uint64_t seed, double z)
{
    require_positive(k, "k");
    require_positive(samples, "samples");
    require_positive(horizon, "horizon");
    if (n_list.empty() || n_list.front() < 0 || !std::is_sorted(n_list.begin(), n_list.end())
        || std::adjacent_find(n_list.begin(), n_list.end()) != n_list.end()) {
        throw std::invalid_argument("truncation gap: n list must be nonempty, nonnegative and strictly increasing");
    }
    std::vector<graph::Truncation> truncations;
    for (int n : n_list) {
        truncations.push_back(graph::truncate(graph, origin, n));
    }
    const graph::Distances& distances = truncations.back().distances;
    const std::size_t m = n_list.size();

    std::vector<std::vector<Outcome>> lhs(m, std::vector<Outcome>(samples));
    std::vector<std::vector<Outcome>> rhs = lhs, tail = lhs;
    std::vector<std::vector<std::uint8_t>> violation(m, std::vector<std::uint8_t>(samples, 0));
    std::vector<std::uint8_t> monotone_violation(samples, 0);

    struct Context {
        std::vector<walk::FiniteWalk> truncated;
        std::vector<walk::StopTime> exits;
    };
    auto make_context = [&] {
        Context ctx;
        for (const auto& t : truncations) {
            ctx.truncated.emplace_back(t.graph, origin, 0);
        }
        ctx.exits.resize(m);
        return ctx;
    };

    for_each_replica(samples, worker_count(), make_context, [&](Context& ctx, std::uint64_t i) {
        const std::uint64_t s = replica_seed(seed, i);

        // Walk on G; exit times for every n come from a single pass.
        walk::Observation obs;
        obs.origin = origin;
        obs.k = k;
        std::fill(ctx.exits.begin(), ctx.exits.end(), walk::StopTime::censored());
        std::size_t next_exit = 0;
        auto stop = [&](VertexId x, std::uint64_t t, const walk::StoppingReport& r) {
            auto it = distances.find(x);
            const int d = it == distances.end() ? INT_MAX : it->second;
            while (next_exit < m && d > n_list[next_exit]) {
                ctx.exits[next_exit++] = walk::StopTime::at(t);
            }
            return r.reached_all_returns();
        };
        walk::OracleWalk on_graph(graph, origin, s);
        const auto report = walk::run_unrecorded(on_graph, stop, horizon, obs);
        const walk::StopTime tau = report.last_return();

        bool previous_tail = true;
        for (std::size_t j = 0; j < m; ++j) {
            walk::Observation obs_n = obs;
            obs_n.delta = truncations[j].delta;
            ctx.truncated[j].reset(origin, s);
            const auto rn = walk::run_unrecorded(ctx.truncated[j], walk::stop_at_return_or_absorption(), horizon, obs_n);
            const bool rhs_hit = rn.reached_all_returns();
            const bool tail_hit = tau.hit() && ctx.exits[j].hit() && ctx.exits[j].value < tau.value;

            lhs[j][i] = tau.hit() ? Outcome::success : Outcome::censored;
            rhs[j][i] = rhs_hit ? Outcome::success : rn.absorption_time.hit() ? Outcome::failure : Outcome::censored;
            tail[j][i] = tail_hit ? Outcome::success : tau.hit() ? Outcome::failure : Outcome::censored;
            violation[j][i] = static_cast<int>(tau.hit()) != static_cast<int>(rhs_hit) + static_cast<int>(tail_hit);
            if (tail_hit && !previous_tail) {
                monotone_violation[i] = 1;
            }
            previous_tail = tail_hit;
        }
    });

    GapSweep sweep;
    sweep.k = k;
    sweep.horizon = horizon;
    for (std::size_t j = 0; j < m; ++j) {
        GapRow row;
        row.n = n_list[j];
        row.lhs = tally(lhs[j], seed, Convention::over_all_samples, z);
        row.rhs = tally(rhs[j], seed, Convention::over_all_samples, z);
        row.tail = tally(tail[j], seed, Convention::over_all_samples, z);
        for (auto v : violation[j]) {
            row.identity_violations += v;
        }
        sweep.rows.push_back(row);
    }
    for (auto v : monotone_violation) {
        sweep.tail_monotonicity_violations += v;
    }
    return sweep;
}

GapRow truncation_gap(const graph::GraphOracle& graph, VertexId origin, int n, unsigned k, std::uint64_t horizon,
                      std::uint64_t samples, std::uint64_t seed, double z)
{
    return truncation_gap_sweep(graph, origin, {n}, k, horizon, samples, seed, z).rows.front();
}

// Coupling audit

CouplingAudit coupling_audit(const graph::GraphOracle& graph, VertexId origin, int n, unsigned k,
                             std::uint64_t horizon, std::uint64_t samples, std::uint64_t seed)
{
    require_positive(samples, "samples");
    const graph::Truncation truncation = graph::truncate(graph, origin, n);
    struct Verdict {
        std::uint8_t reached = 0, early = 0, mismatch = 0;
    };
    std::vector<Verdict> verdicts(samples);
    for_each_replica(
        samples, worker_count(), [] { return 0; },
        [&](int, std::uint64_t i) {
            const auto run = walk::coupled_run(graph, truncation, replica_seed(seed, i), k, horizon);
            const auto& exit = run.on_graph.report.exit_time;
            const auto& absorb = run.on_truncation.report.absorption_time;
            Verdict& v = verdicts[i];
            v.reached = exit.hit();
            if (run.divergence) {
                if (!exit.hit() || *run.divergence < exit.value) {
                    v.early = 1;
                } else if (*run.divergence != exit.value || !absorb.hit() || absorb.value != exit.value) {
                    v.mismatch = 1;
                }
            } else if (exit.hit() != absorb.hit() || (exit.hit() && exit.value != absorb.value)) {
                v.mismatch = 1;
            }
        });
    CouplingAudit audit;
    audit.replicas = samples;
    for (const auto& v : verdicts) {
        audit.reached_exit += v.reached;
        audit.pre_exit_divergences += v.early;
        audit.index_mismatches += v.mismatch;
    }
    return audit;
}

// Recurrence profile

RecurrenceProfile recurrence_profile(const graph::GraphOracle& graph, VertexId origin, const std::vector<int>& n_list,
                                     unsigned k, std::uint64_t samples, std::uint64_t seed, double z)
{
    if (!std::is_sorted(n_list.begin(), n_list.end())
        || std::adjacent_find(n_list.begin(), n_list.end()) != n_list.end()) {
        throw std::invalid_argument("recurrence profile: n list must be strictly increasing");
    }
    RecurrenceProfile profile;
    profile.family = graph.descriptor();
    for (int n : n_list) {
        const auto t = graph::truncate(graph, origin, n);
        profile.entries.push_back({n, k, estimate_absorbed_return(t, k, samples, seed, z)});
    }
    return profile;
}

bool nondecreasing_within_bands(const RecurrenceProfile& profile)
{
    for (std::size_t i = 1; i < profile.entries.size(); ++i) {
        if (profile.entries[i].estimate.ci_high < profile.entries[i - 1].estimate.ci_low) {
            return false;
        }
    }
    return true;
}

// Edge coverage

std::uint64_t CoverageReport::overall_min() const
{
    return min_directed.empty() ? 0 : *std::min_element(min_directed.begin(), min_directed.end());
}

namespace {

struct CoverageTally {
    std::uint64_t min_directed = 0;
    std::uint64_t untouched = 0;
    std::uint64_t region = 0;
};

template <class Walk>
CoverageTally cover(Walk& w, const graph::GraphOracle& graph, VertexId origin, std::uint64_t horizon)
{
    std::unordered_map<graph::EdgeId, std::array<std::uint64_t, 2>> directed;
    std::unordered_set<VertexId> visited{origin};
    VertexId from = origin;
    for (std::uint64_t t = 0; t < horizon; ++t) {
        const walk::Step s = w.step();
        ++directed[s.edge][from < s.to ? 0 : 1];
        visited.insert(s.to);
        from = s.to;
    }
    CoverageTally c;
    c.min_directed = UINT64_MAX;
    std::unordered_set<graph::EdgeId> seen;
    std::vector<graph::Incidence> nbrs;
    for (VertexId v : visited) {
        graph.neighbors(v, nbrs);
        for (const auto& inc : nbrs) {
            if (!visited.contains(inc.other) || !seen.insert(inc.edge).second) {
                continue;
            }
            ++c.region;
            auto it = directed.find(inc.edge);
            const std::array<std::uint64_t, 2> counts = it == directed.end() ? std::array<std::uint64_t, 2>{0, 0} : it->second;
            const std::uint64_t least = inc.other == v ? counts[0] + counts[1] : std::min(counts[0], counts[1]);
            c.min_directed = std::min(c.min_directed, least);
            c.untouched += counts[0] + counts[1] == 0;
        }
    }
    if (c.region == 0) {
        c.min_directed = 0;
    }
    return c;
}

}  // namespace

CoverageReport edge_coverage(const graph::GraphOracle& graph, VertexId origin, std::uint64_t horizon,
                             std::uint64_t samples, std::uint64_t seed)
{
    require_positive(horizon, "horizon");
    require_positive(samples, "samples");
    std::vector<CoverageTally> tallies(samples);
    const auto* finite = dynamic_cast<const graph::FiniteGraph*>(&graph);
    for_each_replica(
        samples, worker_count(), [] { return 0; },
        [&](int, std::uint64_t i) {
            const std::uint64_t s = replica_seed(seed, i);
            if (finite) {
                walk::FiniteWalk w(*finite, origin, s);
                tallies[i] = cover(w, graph, origin, horizon);
            } else {
                walk::OracleWalk w(graph, origin, s);
                tallies[i] = cover(w, graph, origin, horizon);
            }
        });
    CoverageReport report;
    report.horizon = horizon;
    for (const auto& t : tallies) {
        report.min_directed.push_back(t.min_directed);
        report.untouched.push_back(t.untouched);
        report.region_edges.push_back(t.region);
    }
    return report;
}

// Power identity

PowerIdentity power_identity_check(const mixture::LeafStarInstance& inst, unsigned k, std::uint64_t samples,
                                   std::uint64_t seed, double z)
{
    const graph::FiniteGraph g = inst.graph();
    const AbsorbingTarget target{&g, mixture::LeafStarInstance::origin, mixture::LeafStarInstance::delta};
    PowerIdentity result;
    result.estimate = estimate_absorbed_return(target, k, samples, seed, safety_horizon, z);
    result.exact = mixture::beta_mixture_moment(inst, k);
    const double p = to_double(result.exact);
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
    result.z = se > 0.0 ? (result.estimate.point - p) / se : 0.0;
    return result;
}

// CSV

std::string format_real(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_csv_header(std::ostream& out)
{
    out << "family,alpha,n,k,samples,horizon,point,ci_low,ci_high,censored,seed,quantity\n";
}

void write_csv_row(std::ostream& out, const CsvRow& row)
{
    out << row.family << ',' << row.alpha << ',' << (row.n ? std::to_string(*row.n) : std::string("NA")) << ','
        << row.k << ',' << row.samples << ',' << row.horizon << ',' << format_real(row.estimate.point) << ','
        << format_real(row.estimate.ci_low) << ',' << format_real(row.estimate.ci_high) << ','
        << row.estimate.censored << ',' << row.estimate.master_seed << ',' << row.quantity << '\n';
}

}  // namespace errw::estimators
