#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "dpk/error.hpp"
#include "dpk/measure.hpp"

namespace dpk {

/// A finite credal set given by its generators. The envelopes of the generators
/// equal those of their convex hull, so the generator list stands for the core.
class CredalSet {
public:
    explicit CredalSet(std::vector<ProbMeasure> generators, std::size_t step_tag = 0)
        : generators_(std::move(generators)), step_tag_(step_tag) {
        if (generators_.empty())
            throw Error(ErrorKind::InvalidMeasure, "credal set needs at least one generator");
        for (std::size_t i = 1; i < generators_.size(); ++i)
            if (generators_[i].size() != generators_[0].size())
                throw Error(ErrorKind::SpaceMismatch, "generator " + std::to_string(i) + " lives on another space",
                            i);
    }

    std::size_t size() const noexcept { return generators_.size(); }
    std::size_t atom_count() const noexcept { return generators_.front().size(); }
    std::size_t step_tag() const noexcept { return step_tag_; }
    const ProbMeasure& operator[](std::size_t i) const { return generators_[i]; }
    const std::vector<ProbMeasure>& generators() const noexcept { return generators_; }
    auto begin() const noexcept { return generators_.begin(); }
    auto end() const noexcept { return generators_.end(); }

    bool has_duplicates() const {
        for (std::size_t i = 0; i < generators_.size(); ++i)
            for (std::size_t j = i + 1; j < generators_.size(); ++j)
                if (generators_[i] == generators_[j])
                    return true;
        return false;
    }

    /// Same set with exact duplicates dropped (first occurrence kept).
    CredalSet deduplicated() const {
        std::vector<ProbMeasure> out;
        for (const auto& g : generators_)
            if (std::find(out.begin(), out.end(), g) == out.end())
                out.push_back(g);
        return CredalSet(std::move(out), step_tag_);
    }

    bool operator==(const CredalSet&) const = default;

private:
    std::vector<ProbMeasure> generators_;
    std::size_t step_tag_ = 0;
};

inline double lower_prob(const CredalSet& set, const Event& a) {
    double v = std::numeric_limits<double>::infinity();
    for (const auto& g : set)
        v = std::min(v, prob(g, a));
    return v;
}

inline double upper_prob(const CredalSet& set, const Event& a) {
    double v = -std::numeric_limits<double>::infinity();
    for (const auto& g : set)
        v = std::max(v, prob(g, a));
    return v;
}

/// P(A) for every event A, indexed by bitmask. m ≤ kEnumerationLimit.
inline std::vector<double> event_table(const ProbMeasure& p) {
    const std::size_t m = p.size();
    if (m > kEnumerationLimit)
        throw Error(ErrorKind::BudgetExceeded, "2^" + std::to_string(m) + " events exceed the enumeration budget");
    std::vector<double> table(std::size_t{1} << m, 0.0);
    for (std::size_t mask = 1; mask < table.size(); ++mask) {
        const auto low = static_cast<std::size_t>(std::countr_zero(mask));
        table[mask] = table[mask & (mask - 1)] + p[low];
    }
    return table;
}

/// Lower and upper envelopes of a credal set on every event, indexed by bitmask.
struct EnvelopeTable {
    std::vector<double> lower;
    std::vector<double> upper;

    explicit EnvelopeTable(const CredalSet& set) {
        for (const auto& g : set) {
            auto t = event_table(g);
            if (lower.empty()) {
                lower = t;
                upper = std::move(t);
                continue;
            }
            for (std::size_t k = 0; k < t.size(); ++k) {
                lower[k] = std::min(lower[k], t[k]);
                upper[k] = std::max(upper[k], t[k]);
            }
        }
    }
};

enum class ConditionalRule { generalized_bayes, geometric };

struct ConditionalBounds {
    double lower = 0.0;
    double upper = 0.0;
    ConditionalRule rule = ConditionalRule::generalized_bayes;
};

/// Extremes of P(A | E) over the generators; (0, 0) when E = ∅.
inline ConditionalBounds gen_bayes_bounds(const CredalSet& set, const Event& a, const Event& e) {
    ConditionalBounds out{0.0, 0.0, ConditionalRule::generalized_bayes};
    if (e.empty())
        return out;
    const Event ae = a.intersect(e);
    out.lower = std::numeric_limits<double>::infinity();
    out.upper = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < set.size(); ++i) {
        const double pe = prob(set[i], e);
        if (pe <= 0.0)
            throw Error(ErrorKind::NullConditioner, "generator " + std::to_string(i) + " gives the conditioner probability 0", i);
        const double r = prob(set[i], ae) / pe;
        out.lower = std::min(out.lower, r);
        out.upper = std::max(out.upper, r);
    }
    return out;
}

/**
 * Geometric conditional envelopes:
 *
 *     lower = P̲(A∩E) / P̲(E),    upper = 1 − P̲(Aᶜ∩E) / P̲(E).
 *
 * The upper value is the conjugate of the lower one, which keeps
 * P̲^B ≤ P̲^G ≤ P̄^G ≤ P̄^B for every coherent lower probability. The plain
 * ratio of upper envelopes is a different rule and breaks that chain.
 */
inline ConditionalBounds geometric_bounds(const CredalSet& set, const Event& a, const Event& e) {
    if (e.empty())
        throw Error(ErrorKind::NullEnvelope, "geometric rule needs a nonempty conditioner");
    const double le = lower_prob(set, e);
    if (le <= 0.0)
        throw Error(ErrorKind::NullEnvelope, "lower envelope of the conditioner is 0");
    const std::size_t m = set.atom_count();
    const double lo = lower_prob(set, a.intersect(e)) / le;
    const double hi = 1.0 - lower_prob(set, a.complement(m).intersect(e)) / le;
    return ConditionalBounds{lo, hi, ConditionalRule::geometric};
}

/// Hausdorff distance under total variation between two generator lists.
inline double hausdorff(const CredalSet& a, const CredalSet& b) {
    if (a.atom_count() != b.atom_count())
        throw Error(ErrorKind::SpaceMismatch, "credal sets over different spaces");
    auto directed = [](const CredalSet& from, const CredalSet& to) {
        double worst = 0.0;
        for (const auto& p : from) {
            double nearest = std::numeric_limits<double>::infinity();
            for (const auto& q : to)
                nearest = std::min(nearest, tv_distance(p, q));
            worst = std::max(worst, nearest);
        }
        return worst;
    };
    return std::max(directed(a, b), directed(b, a));
}

/**
 * Whether `candidate` dominates the lower envelope on every event. All 2^m
 * events are checked when m ≤ kEnumerationLimit; larger spaces need a positive
 * `event_budget` of sampled events (drawn from `seed`).
 */
inline bool core_membership(const CredalSet& set, const ProbMeasure& candidate, std::size_t event_budget = 0,
                            std::uint64_t seed = 0) {
    require_same_space(set[0], candidate);
    const std::size_t m = set.atom_count();
    if (m <= kEnumerationLimit) {
        const EnvelopeTable env(set);
        const auto cand = event_table(candidate);
        for (std::size_t k = 0; k < cand.size(); ++k)
            if (cand[k] < env.lower[k] - tol::comparison)
                return false;
        return true;
    }
    if (event_budget == 0)
        throw Error(ErrorKind::BudgetExceeded, "exhaustive core check needs m <= 20; pass an event budget");
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    for (std::size_t t = 0; t < event_budget; ++t) {
        std::vector<std::size_t> atoms;
        for (std::size_t i = 0; i < m; ++i)
            if (coin(rng))
                atoms.push_back(i);
        const Event e(std::move(atoms));
        if (prob(candidate, e) < lower_prob(set, e) - tol::comparison)
            return false;
    }
    return true;
}

} // namespace dpk
