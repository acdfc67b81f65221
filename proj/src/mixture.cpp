#include "errw/mixture.hpp"

#include "errw/hash.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace errw::mixture {

std::uint64_t TransitionCountSignature::length() const
{
    std::uint64_t n = 0;
    for (const auto& [t, c] : counts) {
        n += c;
    }
    return n;
}

std::uint64_t TransitionCountSignature::hash() const
{
    Fnv1a h;
    h.update_u64(static_cast<std::uint64_t>(start));
    for (const auto& [t, c] : counts) {
        h.update_u64(static_cast<std::uint64_t>(t.from));
        h.update_u64(static_cast<std::uint64_t>(t.edge));
        h.update_u64(static_cast<std::uint64_t>(t.to));
        h.update_u64(c);
    }
    return h.digest();
}

TransitionCountSignature signature(const walk::Trajectory& trajectory)
{
    TransitionCountSignature sig;
    sig.start = trajectory.start;
    VertexId from = trajectory.start;
    for (const auto& s : trajectory.steps) {
        ++sig.counts[{from, s.edge, s.to}];
        from = s.to;
    }
    return sig;
}

ExchangeabilityReport exchangeability_check(const graph::FiniteGraph& graph, VertexId origin, unsigned length,
                                            std::uint64_t guard)
{
    struct Tally {
        std::uint64_t size = 0;
        Rational min;
        Rational max;
    };
    std::map<TransitionCountSignature, Tally> classes;
    ExchangeabilityReport report;
    report.length = length;
    report.total_mass = 0;

    walk::enumerate_paths(
        graph, origin, length,
        [&](const walk::Trajectory& path, const Rational& p) {
            ++report.paths;
            report.total_mass += p;
            auto [it, fresh] = classes.try_emplace(signature(path));
            Tally& t = it->second;
            if (fresh) {
                t.min = p;
                t.max = p;
            } else {
                t.min = std::min(t.min, p);
                t.max = std::max(t.max, p);
            }
            ++t.size;
        },
        guard);

    report.max_spread = 0;
    for (auto& [sig, t] : classes) {
        SignatureClass c{sig, t.size, t.min, t.max - t.min};
        report.max_spread = std::max(report.max_spread, c.spread);
        report.classes.push_back(std::move(c));
    }
    return report;
}

void write_exchangeability(std::ostream& out, const ExchangeabilityReport& report)
{
    char hash[24];
    for (const auto& c : report.classes) {
        std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(c.signature.hash()));
        out << hash << ' ' << c.size << ' ' << to_fraction_string(c.probability) << '\n';
    }
}

// Leaf star

LeafStarInstance::LeafStarInstance(double a_, double b_) : a(a_), b(b_)
{
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
        throw std::invalid_argument("leaf star: weights a and b must be positive");
    }
}

graph::FiniteGraph LeafStarInstance::graph() const
{
    graph::FiniteGraph g({origin, leaf, delta}, {{leaf_edge, origin, leaf, a}, {delta_edge, origin, delta, b}}, origin);
    g.set_descriptor("leaf_star");
    return g;
}

Rational leaf_star_return_prob(const LeafStarInstance& inst, unsigned k)
{
    if (k < 1) {
        throw std::invalid_argument("leaf_star_return_prob: k must be at least 1");
    }
    const Rational a = to_rational(inst.a);
    const Rational b = to_rational(inst.b);
    Rational p = 1;
    for (unsigned j = 0; j < k; ++j) {
        p *= (a + 2 * j) / (a + b + 2 * j);
    }
    return p;
}

Rational beta_mixture_moment(const LeafStarInstance& inst, unsigned k)
{
    if (k < 1) {
        throw std::invalid_argument("beta_mixture_moment: k must be at least 1");
    }
    const Rational shape_a = to_rational(inst.a) / 2;
    const Rational shape_sum = (to_rational(inst.a) + to_rational(inst.b)) / 2;
    Rational m = 1;
    for (unsigned j = 0; j < k; ++j) {
        m *= (shape_a + j) / (shape_sum + j);
    }
    return m;
}

// Lemma

namespace {

template <class Scalar>
void validate_shape(const LemmaWitness<Scalar>& w)
{
    if (w.k < 1) {
        throw InvalidWitness("lemma witness: k must be at least 1");
    }
    if (w.p.empty() || w.p.size() != w.f.size()) {
        throw InvalidWitness("lemma witness: p and f must be nonempty and of equal length");
    }
}

}  // namespace

LemmaResult<Rational> lemma_check(const LemmaWitness<Rational>& w)
{
    validate_shape(w);
    Rational mass = 0, mean = 0, moment = 0;
    for (std::size_t i = 0; i < w.p.size(); ++i) {
        if (w.p[i] < 0) {
            throw InvalidWitness("lemma witness: negative probability");
        }
        if (w.f[i] < 0 || w.f[i] > 1) {
            throw InvalidWitness("lemma witness: f outside [0, 1]");
        }
        mass += w.p[i];
        mean += w.p[i] * w.f[i];
        Rational power = 1;
        for (unsigned j = 0; j < w.k; ++j) {
            power *= w.f[i];
        }
        moment += w.p[i] * power;
    }
    if (mass != 1) {
        throw InvalidWitness("lemma witness: p does not sum to 1");
    }
    LemmaResult<Rational> r{1 - moment, w.k * (1 - mean), false};
    r.holds = r.gap >= 0 && r.gap <= r.bound;
    return r;
}

LemmaResult<double> lemma_check(const LemmaWitness<double>& w)
{
    validate_shape(w);
    double mass = 0, mean = 0, moment = 0;
    for (std::size_t i = 0; i < w.p.size(); ++i) {
        if (!(w.p[i] >= 0.0)) {
            throw InvalidWitness("lemma witness: negative probability");
        }
        if (!(w.f[i] >= 0.0 && w.f[i] <= 1.0)) {
            throw InvalidWitness("lemma witness: f outside [0, 1]");
        }
        mass += w.p[i];
        mean += w.p[i] * w.f[i];
        moment += w.p[i] * std::pow(w.f[i], static_cast<double>(w.k));
    }
    if (std::abs(mass - 1.0) > lemma_float_slack) {
        throw InvalidWitness("lemma witness: p does not sum to 1 within 1e-12");
    }
    LemmaResult<double> r{1.0 - moment, w.k * (1.0 - mean), false};
    r.holds = r.gap >= -lemma_float_slack && r.gap <= r.bound + lemma_float_slack;
    return r;
}

LemmaFuzzReport lemma_fuzz(std::uint64_t count, unsigned max_k, std::uint64_t seed)
{
    if (max_k < 1) {
        throw std::invalid_argument("lemma_fuzz: max_k must be at least 1");
    }
    walk::Rng rng(seed);
    auto below = [&](std::uint64_t n) { return rng.next_u64() % n; };

    LemmaFuzzReport report;
    report.min_float_margin = std::numeric_limits<double>::infinity();
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::size_t size = 1 + below(8);
        const unsigned k = 1 + static_cast<unsigned>(below(max_k));

        LemmaWitness<Rational> exact;
        exact.k = k;
        std::vector<std::uint64_t> weights(size);
        std::uint64_t weight_sum = 0;
        for (auto& wt : weights) {
            wt = below(21);
            weight_sum += wt;
        }
        if (weight_sum == 0) {
            weights[0] = 1;
            weight_sum = 1;
        }
        for (std::size_t j = 0; j < size; ++j) {
            exact.p.emplace_back(weights[j], weight_sum);
            const std::uint64_t den = 1 + below(50);
            exact.f.emplace_back(below(den + 1), den);
        }
        if (!lemma_check(exact).holds) {
            ++report.violations;
        }
        ++report.rational_witnesses;

        LemmaWitness<double> approx;
        approx.k = k;
        double total = 0.0;
        for (std::size_t j = 0; j < size; ++j) {
            const double e = -std::log1p(-rng.uniform());
            approx.p.push_back(e);
            total += e;
            const auto atom = below(10);
            approx.f.push_back(atom == 0 ? 0.0 : atom == 1 ? 1.0 : rng.uniform());
        }
        if (total == 0.0) {
            approx.p[0] = total = 1.0;
        }
        for (auto& p : approx.p) {
            p /= total;
        }
        const auto r = lemma_check(approx);
        if (!r.holds) {
            ++report.violations;
        }
        report.min_float_margin = std::min(report.min_float_margin, r.bound - r.gap);
        ++report.float_witnesses;
    }
    return report;
}

}  // namespace errw::mixture
