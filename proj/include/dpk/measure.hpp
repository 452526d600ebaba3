#pragma once

// Finite state spaces, events, probability measures and the handful of
// measure-level operations every other module is written against.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iterator>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "dpk/error.hpp"

namespace dpk {

namespace tol {
/// Slack allowed on the total mass of a measure (or weight vector) at construction.
inline constexpr double construction = 1e-9;
/// Slack used when comparing against exact rationals.
inline constexpr double comparison = 1e-12;
} // namespace tol

/// Largest atom count for which events are enumerated exhaustively.
inline constexpr std::size_t kEnumerationLimit = 20;

/// Ordered, distinct atom labels. Atom index is the canonical identity.
class StateSpace {
public:
    explicit StateSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
        if (labels_.empty())
            throw Error(ErrorKind::InvalidEvent, "state space needs at least one atom");
        std::unordered_set<std::string> seen;
        for (const auto& l : labels_)
            if (!seen.insert(l).second)
                throw Error(ErrorKind::InvalidEvent, "duplicate atom label '" + l + "'");
    }

    /// Anonymous space with labels "0", "1", ...
    static StateSpace indexed(std::size_t m) {
        std::vector<std::string> labels(m);
        for (std::size_t i = 0; i < m; ++i)
            labels[i] = std::to_string(i);
        return StateSpace(std::move(labels));
    }

    std::size_t size() const noexcept { return labels_.size(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    const std::string& label(std::size_t i) const { return labels_.at(i); }

    /// Index of `label`, or size() when absent.
    std::size_t find(const std::string& label) const {
        auto it = std::find(labels_.begin(), labels_.end(), label);
        return static_cast<std::size_t>(it - labels_.begin());
    }

    bool operator==(const StateSpace&) const = default;

private:
    std::vector<std::string> labels_;
};

/// A set of atom indices kept sorted and duplicate-free.
class Event {
public:
    Event() = default;
    Event(std::initializer_list<std::size_t> atoms) : Event(std::vector<std::size_t>(atoms)) {}
    explicit Event(std::vector<std::size_t> atoms) : atoms_(std::move(atoms)) {
        std::sort(atoms_.begin(), atoms_.end());
        atoms_.erase(std::unique(atoms_.begin(), atoms_.end()), atoms_.end());
    }

    static Event full(std::size_t m) {
        std::vector<std::size_t> all(m);
        std::iota(all.begin(), all.end(), std::size_t{0});
        return Event(std::move(all));
    }

    /// Bit i of `mask` selects atom i; m ≤ 64.
    static Event from_mask(std::uint64_t mask, std::size_t m) {
        std::vector<std::size_t> atoms;
        for (std::size_t i = 0; i < m; ++i)
            if ((mask >> i) & 1u)
                atoms.push_back(i);
        Event e;
        e.atoms_ = std::move(atoms);
        return e;
    }

    std::uint64_t to_mask() const {
        std::uint64_t mask = 0;
        for (auto i : atoms_) {
            if (i >= 64)
                throw Error(ErrorKind::InvalidEvent, "atom index too large for a mask");
            mask |= std::uint64_t{1} << i;
        }
        return mask;
    }

    bool empty() const noexcept { return atoms_.empty(); }
    std::size_t size() const noexcept { return atoms_.size(); }
    bool contains(std::size_t atom) const { return std::binary_search(atoms_.begin(), atoms_.end(), atom); }
    const std::vector<std::size_t>& atoms() const noexcept { return atoms_; }
    auto begin() const noexcept { return atoms_.begin(); }
    auto end() const noexcept { return atoms_.end(); }

    Event complement(std::size_t m) const {
        std::vector<std::size_t> out;
        out.reserve(m - std::min(m, atoms_.size()));
        auto it = atoms_.begin();
        for (std::size_t i = 0; i < m; ++i) {
            if (it != atoms_.end() && *it == i)
                ++it;
            else
                out.push_back(i);
        }
        return raw(std::move(out));
    }

    Event intersect(const Event& other) const {
        std::vector<std::size_t> out;
        std::set_intersection(begin(), end(), other.begin(), other.end(), std::back_inserter(out));
        return raw(std::move(out));
    }

    Event unite(const Event& other) const {
        std::vector<std::size_t> out;
        std::set_union(begin(), end(), other.begin(), other.end(), std::back_inserter(out));
        return raw(std::move(out));
    }

    Event minus(const Event& other) const {
        std::vector<std::size_t> out;
        std::set_difference(begin(), end(), other.begin(), other.end(), std::back_inserter(out));
        return raw(std::move(out));
    }

    bool is_subset_of(const Event& other) const {
        return std::includes(other.begin(), other.end(), begin(), end());
    }

    bool disjoint_from(const Event& other) const { return intersect(other).empty(); }

    /// Throws InvalidEvent if any index is outside a space of `m` atoms.
    void check(std::size_t m) const {
        if (!atoms_.empty() && atoms_.back() >= m)
            throw Error(ErrorKind::InvalidEvent,
                        "atom index " + std::to_string(atoms_.back()) + " outside space of " + std::to_string(m));
    }

    bool operator==(const Event&) const = default;
    auto operator<=>(const Event&) const = default;

private:
    static Event raw(std::vector<std::size_t> sorted) {
        Event e;
        e.atoms_ = std::move(sorted);
        return e;
    }

    std::vector<std::size_t> atoms_;
};

/// Dense mass vector over the atoms of a finite space.
class ProbMeasure {
public:
    explicit ProbMeasure(std::vector<double> masses) : masses_(std::move(masses)) {
        if (masses_.empty())
            throw Error(ErrorKind::InvalidMeasure, "measure over an empty space");
        double total = 0.0;
        for (double x : masses_) {
            if (!std::isfinite(x) || x < 0.0)
                throw Error(ErrorKind::InvalidMeasure, "mass " + std::to_string(x) + " is negative or not finite");
            total += x;
        }
        if (std::abs(total - 1.0) > tol::construction)
            throw Error(ErrorKind::InvalidMeasure, "masses sum to " + std::to_string(total));
    }

    static ProbMeasure uniform(std::size_t m) { return ProbMeasure(std::vector<double>(m, 1.0 / static_cast<double>(m))); }

    static ProbMeasure point_mass(std::size_t m, std::size_t atom) {
        std::vector<double> v(m, 0.0);
        v.at(atom) = 1.0;
        return ProbMeasure(std::move(v));
    }

    std::size_t size() const noexcept { return masses_.size(); }
    double operator[](std::size_t i) const { return masses_[i]; }
    std::span<const double> masses() const noexcept { return masses_; }

    bool operator==(const ProbMeasure&) const = default;

private:
    std::vector<double> masses_;
};

inline void require_same_space(const ProbMeasure& p, const ProbMeasure& q) {
    if (p.size() != q.size())
        throw Error(ErrorKind::SpaceMismatch,
                    "measures over " + std::to_string(p.size()) + " and " + std::to_string(q.size()) + " atoms");
}

/// P(A) by finite additivity.
inline double prob(const ProbMeasure& p, const Event& a) {
    a.check(p.size());
    double s = 0.0;
    for (auto i : a)
        s += p[i];
    return s;
}

/// P(A | E), with P(A | ∅) = 0. Conditioning on a nonempty null event is an error.
inline double cond_prob(const ProbMeasure& p, const Event& a, const Event& e) {
    a.check(p.size());
    e.check(p.size());
    if (e.empty())
        return 0.0;
    const double pe = prob(p, e);
    if (pe <= 0.0)
        throw Error(ErrorKind::NullNonemptyConditioner, "conditioning event has probability 0");
    return prob(p, a.intersect(e)) / pe;
}

/// sup_A |P(A) - Q(A)|, i.e. half the L1 distance of the mass vectors.
inline double tv_distance(const ProbMeasure& p, const ProbMeasure& q) {
    require_same_space(p, q);
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

/// Total variation by direct enumeration of all 2^m events. Test oracle.
inline double tv_distance_bruteforce(const ProbMeasure& p, const ProbMeasure& q) {
    require_same_space(p, q);
    const std::size_t m = p.size();
    if (m > kEnumerationLimit)
        throw Error(ErrorKind::BudgetExceeded, "2^" + std::to_string(m) + " events exceed the enumeration budget");
    // Gray-code walk: each step toggles one atom in or out of the event.
    double diff = 0.0;
    double best = 0.0;
    const std::uint64_t count = std::uint64_t{1} << m;
    for (std::uint64_t k = 1; k < count; ++k) {
        const auto bit = static_cast<std::size_t>(std::countr_zero(k));
        const std::uint64_t gray = k ^ (k >> 1);
        const double d = p[bit] - q[bit];
        diff += ((gray >> bit) & 1u) ? d : -d;
        best = std::max(best, std::abs(diff));
    }
    return best;
}

/// Componentwise convex combination.
inline ProbMeasure convex_combine(std::span<const double> weights, std::span<const ProbMeasure> measures) {
    if (weights.size() != measures.size() || measures.empty())
        throw Error(ErrorKind::InvalidWeights, "need one weight per measure and at least one measure");
    double total = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0)
            throw Error(ErrorKind::InvalidWeights, "negative or non-finite weight");
        total += w;
    }
    if (std::abs(total - 1.0) > tol::construction)
        throw Error(ErrorKind::InvalidWeights, "weights sum to " + std::to_string(total));
    const std::size_t m = measures.front().size();
    std::vector<double> out(m, 0.0);
    for (std::size_t k = 0; k < measures.size(); ++k) {
        require_same_space(measures.front(), measures[k]);
        for (std::size_t i = 0; i < m; ++i)
            out[i] += weights[k] * measures[k][i];
    }
    return ProbMeasure(std::move(out));
}

} // namespace dpk
