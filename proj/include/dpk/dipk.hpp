#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dpk/credal.hpp"
#include "dpk/dpk.hpp"
#include "dpk/error.hpp"
#include "dpk/measure.hpp"
#include "dpk/observation.hpp"

namespace dpk {

/// Elementwise Jeffrey update of every generator over one shared partition and mass assignment.
inline CredalSet dipk_update(const CredalSet& set, const Partition& partition, const PartitionMasses& masses) {
    std::vector<ProbMeasure> out;
    out.reserve(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        try {
            out.push_back(jeffrey_update(set[i], partition, masses));
        } catch (const Error& e) {
            throw Error(e.kind(), "generator " + std::to_string(i) + ": " + e.what(), i);
        }
    }
    return CredalSet(std::move(out), set.step_tag() + 1);
}

struct DipkState {
    CredalSet set;
    Partition partition;

    std::size_t step() const noexcept { return set.step_tag(); }
};

inline DipkState initial_dipk_state(const CredalSet& set, const ObservationModel& model) {
    if (set.atom_count() != model.atom_count)
        throw Error(ErrorKind::SpaceMismatch, "credal set and model live on different spaces");
    return DipkState{set, induce_partition(model, {})};
}

/// dpk_step applied to every generator with the same refined partition and masses.
inline DipkState dipk_step(const DipkState& state, const ObservationModel& model,
                           const std::vector<std::string>& new_symbols) {
    if (new_symbols.empty())
        return DipkState{CredalSet(state.set.generators(), state.set.step_tag() + 1), state.partition};
    Partition refined = refine_partition(state.partition, model, new_symbols);
    const PartitionMasses masses = mechanical_masses(model, refined);
    return DipkState{dipk_update(state.set, refined, masses), std::move(refined)};
}

struct DipkTrace {
    std::vector<DipkState> states;
    std::vector<double> hausdorff_steps;    // between consecutive sets
    std::vector<double> hausdorff_to_final; // one per state
    StopReason stop_reason = StopReason::schedule_exhausted;

    const DipkState& final_state() const { return states.back(); }
};

inline DipkTrace dipk_run(const CredalSet& prior_set, const ObservationModel& model,
                          const std::vector<std::vector<std::string>>& schedule, const StopRule& stop = {}) {
    DipkTrace trace;
    trace.states.push_back(initial_dipk_state(prior_set, model));
    trace.stop_reason = detail::drive(
        trace.states, trace.hausdorff_steps, model, schedule, stop,
        [&](const DipkState& s, std::size_t i) { return dipk_step(s, model, schedule[i]); },
        [](const DipkState& a, const DipkState& b) { return hausdorff(a.set, b.set); },
        [](const DipkState& s) { return is_terminal(s.partition); });
    for (const auto& s : trace.states)
        trace.hausdorff_to_final.push_back(hausdorff(s.set, trace.states.back().set));
    return trace;
}

struct BoundPair {
    double lower = 0.0;
    double upper = 0.0;
};

/**
 * Envelope bounds for the updated set computed from the current set alone:
 *
 *     P̲'(A) ≥ Σ_j P̲^B(A | E_j) m_j,    P̄'(A) ≤ Σ_j P̄^B(A | E_j) m_j
 *
 * over the cells of the new partition. Empty cells contribute 0.
 */
inline BoundPair jeffrey_bounds(const CredalSet& set, const Partition& partition, const PartitionMasses& masses,
                                const Event& a) {
    if (masses.block_masses.size() != partition.blocks.size())
        throw Error(ErrorKind::ShapeMismatch, "one mass per block expected");
    const auto cells = partition.cells();
    const auto w = masses.cells();
    BoundPair out;
    for (std::size_t j = 0; j < cells.size(); ++j) {
        if (cells[j].empty())
            continue;
        const auto b = gen_bayes_bounds(set, a, cells[j]);
        out.lower += b.lower * w[j];
        out.upper += b.upper * w[j];
    }
    return out;
}

inline double jeffrey_lower_bound(const CredalSet& set, const Partition& partition, const PartitionMasses& masses,
                                  const Event& a) {
    return jeffrey_bounds(set, partition, masses, a).lower;
}

inline double jeffrey_upper_bound(const CredalSet& set, const Partition& partition, const PartitionMasses& masses,
                                  const Event& a) {
    return jeffrey_bounds(set, partition, masses, a).upper;
}

struct GeometricJeffreyBounds {
    double lower = 0.0;
    double upper = 0.0;
    /// Lower-envelope ratio stationarity held across the update on every tested
    /// (event, cell) pair, so the sums are valid envelope bounds.
    bool assumption_held = false;
};

namespace detail {

/// Lower envelope of every subset of `cell`, indexed by a bitmask over the cell's atoms.
inline std::vector<double> cell_lower_table(const CredalSet& set, const Event& cell) {
    const auto& atoms = cell.atoms();
    std::vector<double> lower(std::size_t{1} << atoms.size(), 0.0);
    std::vector<double> sums(lower.size(), 0.0);
    bool first = true;
    for (const auto& g : set) {
        for (std::size_t mask = 1; mask < sums.size(); ++mask)
            sums[mask] = sums[mask & (mask - 1)] + g[atoms[static_cast<std::size_t>(std::countr_zero(mask))]];
        for (std::size_t mask = 0; mask < sums.size(); ++mask)
            lower[mask] = first ? sums[mask] : std::min(lower[mask], sums[mask]);
        first = false;
    }
    return lower;
}

inline constexpr std::size_t kStationarityCellLimit = 12;

inline bool ratio_stationary(const CredalSet& before, const CredalSet& after, const Event& cell, const Event& a,
                             std::size_t m) {
    const double den_before = lower_prob(before, cell);
    const double den_after = lower_prob(after, cell);
    if (den_before <= 0.0 || den_after <= 0.0)
        return false;
    auto close = [&](double num_before, double num_after) {
        return std::abs(num_after / den_after - num_before / den_before) <= tol::construction;
    };
    if (cell.size() <= kStationarityCellLimit) {
        const auto lb = cell_lower_table(before, cell);
        const auto la = cell_lower_table(after, cell);
        for (std::size_t k = 0; k < lb.size(); ++k)
            if (!close(lb[k], la[k]))
                return false;
        return true;
    }
    for (const Event& e : {a.intersect(cell), a.complement(m).intersect(cell)})
        if (!close(lower_prob(before, e), lower_prob(after, e)))
            return false;
    return true;
}

} // namespace detail

/**
 * Geometric-rule analogue of jeffrey_bounds. The sums always sit inside the
 * generalized-Bayes interval; they bound the updated envelopes only when the
 * ratio P̲(B∩E_j)/P̲(E_j) is unchanged by the update. That is checked after
 * performing the update, for every subset B of each cell with at most 12
 * atoms, and for B ∈ {A, Aᶜ} on larger cells.
 */
inline GeometricJeffreyBounds geometric_jeffrey_bounds(const CredalSet& set, const Partition& partition,
                                                       const PartitionMasses& masses, const Event& a) {
    if (masses.block_masses.size() != partition.blocks.size())
        throw Error(ErrorKind::ShapeMismatch, "one mass per block expected");
    const auto cells = partition.cells();
    const auto w = masses.cells();
    GeometricJeffreyBounds out;
    for (std::size_t j = 0; j < cells.size(); ++j) {
        if (cells[j].empty())
            continue;
        const auto g = geometric_bounds(set, a, cells[j]);
        out.lower += g.lower * w[j];
        out.upper += g.upper * w[j];
    }
    const CredalSet updated = dipk_update(set, partition, masses);
    out.assumption_held = true;
    for (std::size_t j = 0; j < cells.size() && out.assumption_held; ++j) {
        if (cells[j].empty() || w[j] == 0.0)
            continue;
        out.assumption_held = detail::ratio_stationary(set, updated, cells[j], a, set.atom_count());
    }
    return out;
}

enum class Behavior { contracts, strictly_contracts, dilates, strictly_dilates, sure_loss, none };

constexpr std::string_view to_string(Behavior b) noexcept {
    switch (b) {
    case Behavior::contracts: return "contracts";
    case Behavior::strictly_contracts: return "strictly_contracts";
    case Behavior::dilates: return "dilates";
    case Behavior::strictly_dilates: return "strictly_dilates";
    case Behavior::sure_loss: return "sure_loss";
    case Behavior::none: return "none";
    }
    return "unknown";
}

/// Slack for the weak and strict envelope comparisons of the classifier.
inline constexpr double kBehaviorSlack = 1e-12;

struct BehaviorReport {
    Event event;
    Behavior classification = Behavior::none;
    double lower_before = 0.0;
    double lower_after = 0.0;
    double upper_before = 0.0;
    double upper_after = 0.0;
    bool contracts = false;
    bool strictly_contracts = false;
    bool dilates = false;
    bool strictly_dilates = false;
    bool sure_loss = false;
};

/// Envelope interval of `a` before and after, and every behavior the definitions admit.
/// The headline classification prefers sure loss, then strict over weak, then contraction.
inline BehaviorReport classify_behavior(const CredalSet& prev, const CredalSet& next, const Event& a) {
    if (prev.atom_count() != next.atom_count())
        throw Error(ErrorKind::SpaceMismatch, "credal sets over different spaces");
    constexpr double t = kBehaviorSlack;
    BehaviorReport r;
    r.event = a;
    r.lower_before = lower_prob(prev, a);
    r.upper_before = upper_prob(prev, a);
    r.lower_after = lower_prob(next, a);
    r.upper_after = upper_prob(next, a);
    r.contracts = r.lower_after >= r.lower_before - t && r.upper_after <= r.upper_before + t;
    r.strictly_contracts = r.lower_after > r.lower_before + t && r.upper_after < r.upper_before - t;
    r.dilates = r.lower_after <= r.lower_before + t && r.upper_after >= r.upper_before - t;
    r.strictly_dilates = r.lower_after < r.lower_before - t && r.upper_after > r.upper_before + t;
    r.sure_loss = r.lower_after > r.upper_before + t || r.upper_after < r.lower_before - t;
    if (r.sure_loss)
        r.classification = Behavior::sure_loss;
    else if (r.strictly_contracts)
        r.classification = Behavior::strictly_contracts;
    else if (r.strictly_dilates)
        r.classification = Behavior::strictly_dilates;
    else if (r.contracts)
        r.classification = Behavior::contracts;
    else if (r.dilates)
        r.classification = Behavior::dilates;
    return r;
}

/// classify_behavior on all 2^m events, m ≤ 12.
inline std::vector<BehaviorReport> sweep_behavior(const CredalSet& prev, const CredalSet& next) {
    const std::size_t m = prev.atom_count();
    if (m > 12)
        throw Error(ErrorKind::BudgetExceeded, "event sweeps are limited to 12 atoms");
    std::vector<BehaviorReport> out;
    out.reserve(std::size_t{1} << m);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask)
        out.push_back(classify_behavior(prev, next, Event::from_mask(mask, m)));
    return out;
}

enum class Guarantee { guaranteed, unknown };

struct SufficientTest {
    Guarantee verdict = Guarantee::unknown;
    bool strict = false;
    BoundPair bounds;
    double lower_before = 0.0;
    double upper_before = 0.0;

    explicit operator bool() const noexcept { return verdict == Guarantee::guaranteed; }
};

/**
 * Contraction from pre-update quantities only: the bound sums already sit
 * inside the current interval. Comparisons are exact so that rounding in the
 * real update cannot turn a guarantee into a false claim; strictness needs a
 * margin above the classifier's slack.
 */
inline SufficientTest sufficient_contraction(const CredalSet& prev, const Partition& partition,
                                             const PartitionMasses& masses, const Event& a) {
    SufficientTest r;
    r.bounds = jeffrey_bounds(prev, partition, masses, a);
    r.lower_before = lower_prob(prev, a);
    r.upper_before = upper_prob(prev, a);
    if (r.bounds.lower >= r.lower_before && r.bounds.upper <= r.upper_before) {
        r.verdict = Guarantee::guaranteed;
        r.strict = r.bounds.lower > r.lower_before + 2 * kBehaviorSlack &&
                   r.bounds.upper < r.upper_before - 2 * kBehaviorSlack;
    }
    return r;
}

/// Sure loss from pre-update quantities: a bound sum clears the current interval.
inline SufficientTest sufficient_sure_loss(const CredalSet& prev, const Partition& partition,
                                           const PartitionMasses& masses, const Event& a) {
    SufficientTest r;
    r.bounds = jeffrey_bounds(prev, partition, masses, a);
    r.lower_before = lower_prob(prev, a);
    r.upper_before = upper_prob(prev, a);
    if (r.bounds.lower > r.upper_before + 2 * kBehaviorSlack || r.bounds.upper < r.lower_before - 2 * kBehaviorSlack) {
        r.verdict = Guarantee::guaranteed;
        r.strict = true;
    }
    return r;
}

struct WitnessCheck {
    bool holds = false;
    bool strict = false;

    explicit operator bool() const noexcept { return holds; }
};

namespace detail {
inline void check_witness(const CredalSet& set, std::size_t s, std::size_t k) {
    if (s >= set.size() || k >= set.size())
        throw Error(ErrorKind::InvalidWitness, "witness index out of range for a set of " + std::to_string(set.size()));
}
} // namespace detail

/// Dilation witnessed by two updated generators: next[s](A) ≤ P̲_prev(A) and next[k](A) ≥ P̄_prev(A).
inline WitnessCheck dilation_witness(const CredalSet& prev, const CredalSet& next, const Event& a, std::size_t s,
                                     std::size_t k) {
    detail::check_witness(next, s, k);
    const double lo = lower_prob(prev, a);
    const double hi = upper_prob(prev, a);
    const double ps = prob(next[s], a);
    const double pk = prob(next[k], a);
    WitnessCheck r;
    r.holds = lo >= ps && hi <= pk;
    r.strict = lo > ps + kBehaviorSlack && hi < pk - kBehaviorSlack;
    return r;
}

/// Contraction witnessed by two previous generators: P̲_next(A) ≥ prev[k](A) and P̄_next(A) ≤ prev[s](A).
inline WitnessCheck contraction_witness(const CredalSet& prev, const CredalSet& next, const Event& a, std::size_t s,
                                        std::size_t k) {
    detail::check_witness(prev, s, k);
    const double lo = lower_prob(next, a);
    const double hi = upper_prob(next, a);
    const double pk = prob(prev[k], a);
    const double ps = prob(prev[s], a);
    WitnessCheck r;
    r.holds = lo >= pk && hi <= ps;
    r.strict = lo > pk + kBehaviorSlack && hi < ps - kBehaviorSlack;
    return r;
}

} // namespace dpk
