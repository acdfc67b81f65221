#pragma once

#include "errw/graph.hpp"
#include "errw/rational.hpp"
#include "errw/walk.hpp"

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <vector>

namespace errw::mixture {

using graph::EdgeId;
using graph::VertexId;

/// Directed use of an edge: (departure, edge, arrival). Keying on the edge id
/// keeps parallel edges apart.
struct Transition {
    VertexId from = 0;
    EdgeId edge = 0;
    VertexId to = 0;

    friend auto operator<=>(const Transition&, const Transition&) = default;
};

struct TransitionCountSignature {
    VertexId start = 0;
    std::map<Transition, std::uint64_t> counts;

    std::uint64_t length() const;
    std::uint64_t hash() const;

    friend auto operator<=>(const TransitionCountSignature&, const TransitionCountSignature&) = default;
};

TransitionCountSignature signature(const walk::Trajectory& trajectory);

struct SignatureClass {
    TransitionCountSignature signature;
    std::uint64_t size = 0;
    Rational probability;  // probability of one member path
    Rational spread;       // max - min probability within the class
};

struct ExchangeabilityReport {
    unsigned length = 0;
    std::uint64_t paths = 0;
    std::vector<SignatureClass> classes;
    Rational max_spread;
    Rational total_mass;

    bool exchangeable() const { return max_spread == 0 && total_mass == 1; }
};

/// Enumerates every length-L path from `origin`, groups them by transition
/// counts and measures, exactly, how far probabilities differ within a group.
ExchangeabilityReport exchangeability_check(const graph::FiniteGraph& graph, VertexId origin, unsigned length,
                                            std::uint64_t guard = 10'000'000);

/// One line per class: `<signature-hash> <class-size> <probability as exact fraction>`.
void write_exchangeability(std::ostream& out, const ExchangeabilityReport& report);

/// Three vertices: origin 0 joined to a leaf 1 (weight a) and to an absorbing
/// vertex 2 (weight b). Every excursion to the leaf crosses the o-leaf edge twice.
struct LeafStarInstance {
    static constexpr VertexId origin = 0;
    static constexpr VertexId leaf = 1;
    static constexpr VertexId delta = 2;
    static constexpr EdgeId leaf_edge = 0;
    static constexpr EdgeId delta_edge = 1;

    double a = 1.0;
    double b = 1.0;

    LeafStarInstance(double a, double b);
    graph::FiniteGraph graph() const;
};

/// P(tau^(k) < tau_delta) = prod_{j<k} (a + 2j) / (a + b + 2j).
Rational leaf_star_return_prob(const LeafStarInstance& inst, unsigned k);

/// k-th moment of Beta(a/2, b/2): prod_{j<k} (a/2 + j) / ((a + b)/2 + j).
Rational beta_mixture_moment(const LeafStarInstance& inst, unsigned k);

class InvalidWitness : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Probability vector p, values f in [0, 1] and exponent k.
template <class Scalar>
struct LemmaWitness {
    std::vector<Scalar> p;
    std::vector<Scalar> f;
    unsigned k = 1;
};

template <class Scalar>
struct LemmaResult {
    Scalar gap;    // 1 - sum p f^k
    Scalar bound;  // k (1 - sum p f)
    bool holds = false;
};

inline constexpr double lemma_float_slack = 1e-12;

/// Exact check of 0 <= 1 - sum p f^k <= k (1 - sum p f).
LemmaResult<Rational> lemma_check(const LemmaWitness<Rational>& w);
/// Floating-point check with lemma_float_slack on sum p and on both sides.
LemmaResult<double> lemma_check(const LemmaWitness<double>& w);

struct LemmaFuzzReport {
    std::uint64_t rational_witnesses = 0;
    std::uint64_t float_witnesses = 0;
    std::uint64_t violations = 0;
    double min_float_margin = 0.0;  // min over float witnesses of bound - gap
};

/// `count` rational and `count` float witnesses with k uniform in [1, max_k].
/// Float p are normalized exponential draws, f uniform with atoms at 0 and 1.
LemmaFuzzReport lemma_fuzz(std::uint64_t count, unsigned max_k, std::uint64_t seed);

}  // namespace errw::mixture
