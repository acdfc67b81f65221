#pragma once

#include "errw/graph.hpp"
#include "errw/hash.hpp"
#include "errw/mixture.hpp"
#include "errw/rational.hpp"
#include "errw/walk.hpp"

#include <algorithm>
#include <cstdint>
#include <exception>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace errw::estimators {

using graph::VertexId;

/// Two-sided 95% normal quantile.
inline constexpr double z95 = 1.959963984540054;
/// Guard for runs on finite graphs that absorb or return almost surely.
inline constexpr std::uint64_t safety_horizon = 100'000'000;

/// How the point estimate treats censored replicas.
enum class Convention : std::uint8_t {
    over_all_samples,  // successes / samples; censored replicas count as non-successes
    over_resolved,     // successes / (samples - censored)
};

struct Estimate {
    double point = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::uint64_t samples = 0;
    std::uint64_t successes = 0;
    std::uint64_t censored = 0;
    std::uint64_t master_seed = 0;
    Convention convention = Convention::over_all_samples;

    std::uint64_t failures() const noexcept { return samples - successes - censored; }
    double standard_error() const;

    friend bool operator==(const Estimate&, const Estimate&) = default;
};

struct Interval {
    double low = 0.0;
    double high = 1.0;
};

/// Wilson score interval for `successes` out of `trials`.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = z95);

enum class Outcome : std::uint8_t { success, failure, censored };

Estimate tally(const std::vector<Outcome>& outcomes, std::uint64_t master_seed,
               Convention convention = Convention::over_all_samples, double z = z95);

/// Worker threads: ERRW_THREADS when set to a positive integer, otherwise the
/// hardware concurrency.
unsigned worker_count();

/// Runs body(context, index) for every replica index in [0, count). Each worker
/// owns one context from make_context(). Results must be written by index so
/// they do not depend on the worker count. The first exception is rethrown.
template <class MakeContext, class Body>
void for_each_replica(std::uint64_t count, unsigned workers, const MakeContext& make_context, const Body& body)
{
    workers = std::max(1u, workers);
    if (workers == 1 || count < 2) {
        auto ctx = make_context();
        for (std::uint64_t i = 0; i < count; ++i) {
            body(ctx, i);
        }
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                auto ctx = make_context();
                for (std::uint64_t i = w; i < count; i += workers) {
                    body(ctx, i);
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

/// A finite graph with an origin and, optionally, an absorbing vertex.
struct AbsorbingTarget {
    const graph::FiniteGraph* graph = nullptr;
    VertexId origin = 0;
    std::optional<VertexId> delta;

    static AbsorbingTarget of(const graph::Truncation& t) { return {&t.graph, t.origin, t.delta}; }
};

/// Replica outcomes for P(tau^(k) < tau_delta): success when the k-th return
/// comes first, failure on absorption, censored when `horizon` runs out.
std::vector<Outcome> absorbed_return_outcomes(const AbsorbingTarget& target, unsigned k, std::uint64_t samples,
                                              std::uint64_t seed, std::uint64_t horizon = safety_horizon);

Estimate estimate_absorbed_return(const AbsorbingTarget& target, unsigned k, std::uint64_t samples,
                                  std::uint64_t seed, std::uint64_t horizon = safety_horizon, double z = z95);
Estimate estimate_absorbed_return(const graph::Truncation& truncation, unsigned k, std::uint64_t samples,
                                  std::uint64_t seed, double z = z95);

/// Replica outcomes for {tau^(k) <= horizon}: success or censored.
std::vector<Outcome> return_by_horizon_outcomes(const graph::GraphOracle& graph, VertexId origin, unsigned k,
                                                std::uint64_t horizon, std::uint64_t samples, std::uint64_t seed);

Estimate estimate_return_by_horizon(const graph::GraphOracle& graph, VertexId origin, unsigned k,
                                    std::uint64_t horizon, std::uint64_t samples, std::uint64_t seed,
                                    double z = z95);

/// lhs = P(tau^(k) <= H) on G, rhs = P_{G_n}(tau^(k) < tau_delta, tau^(k) <= H),
/// tail = P(T_n < tau^(k) <= H) on G, all from the same coupled replicas.
struct GapRow {
    int n = 0;
    Estimate lhs;
    Estimate rhs;
    Estimate tail;
    /// Replicas where 1{lhs} != 1{rhs} + 1{tail}.
    std::uint64_t identity_violations = 0;

    bool consistent() const noexcept { return identity_violations == 0 && lhs.successes == rhs.successes + tail.successes; }
};

struct GapSweep {
    unsigned k = 1;
    std::uint64_t horizon = 0;
    std::vector<GapRow> rows;
    /// Replicas whose tail indicator increases between consecutive n.
    std::uint64_t tail_monotonicity_violations = 0;

    bool consistent() const;
};

/// One walk on G per replica, coupled with one walk on each G_n (n increasing).
GapSweep truncation_gap_sweep(const graph::GraphOracle& graph, VertexId origin, const std::vector<int>& n_list,
                              unsigned k, std::uint64_t horizon, std::uint64_t samples, std::uint64_t seed,
                              double z = z95);
GapRow truncation_gap(const graph::GraphOracle& graph, VertexId origin, int n, unsigned k, std::uint64_t horizon,
                      std::uint64_t samples, std::uint64_t seed, double z = z95);

struct CouplingAudit {
    std::uint64_t replicas = 0;
    std::uint64_t reached_exit = 0;           // replicas with T_n <= horizon on G
    std::uint64_t pre_exit_divergences = 0;   // trajectories differed strictly before T_n
    std::uint64_t index_mismatches = 0;       // divergence index, T_n and tau_delta not all equal

    bool passed() const noexcept { return pre_exit_divergences == 0 && index_mismatches == 0; }
};

CouplingAudit coupling_audit(const graph::GraphOracle& graph, VertexId origin, int n, unsigned k,
                             std::uint64_t horizon, std::uint64_t samples, std::uint64_t seed);

struct ProfileEntry {
    int n = 0;
    unsigned k = 1;
    Estimate estimate;
};

struct RecurrenceProfile {
    std::string family;
    std::uint64_t horizon = safety_horizon;
    std::vector<ProfileEntry> entries;
};

/// p_n = P_{G_n}(tau^(k) < tau_delta) for each n, every n sharing the master seed.
RecurrenceProfile recurrence_profile(const graph::GraphOracle& graph, VertexId origin, const std::vector<int>& n_list,
                                     unsigned k, std::uint64_t samples, std::uint64_t seed, double z = z95);

/// No consecutive pair shows a significant decrease: ci_high(n') >= ci_low(n).
bool nondecreasing_within_bands(const RecurrenceProfile& profile);

struct CoverageReport {
    std::uint64_t horizon = 0;
    /// Per replica: minimum over edges of the visited region (both endpoints
    /// visited) and over their directions of the traversal count.
    std::vector<std::uint64_t> min_directed;
    /// Per replica: edges of the visited region never traversed.
    std::vector<std::uint64_t> untouched;
    std::vector<std::uint64_t> region_edges;

    std::uint64_t overall_min() const;
};

CoverageReport edge_coverage(const graph::GraphOracle& graph, VertexId origin, std::uint64_t horizon,
                             std::uint64_t samples, std::uint64_t seed);

struct PowerIdentity {
    Estimate estimate;  // Monte Carlo P(tau^(k) < tau_delta) on the leaf star
    Rational exact;     // Beta moment
    double z = 0.0;
};

PowerIdentity power_identity_check(const mixture::LeafStarInstance& inst, unsigned k, std::uint64_t samples,
                                   std::uint64_t seed, double z = z95);

/// 17 significant digits.
std::string format_real(double x);

/// family,alpha,n,k,samples,horizon,point,ci_low,ci_high,censored,seed,quantity
struct CsvRow {
    std::string family;
    std::string alpha;
    std::optional<int> n;
    unsigned k = 1;
    std::uint64_t samples = 0;
    std::uint64_t horizon = 0;
    Estimate estimate;
    std::string quantity;
};

void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const CsvRow& row);

}  // namespace errw::estimators
