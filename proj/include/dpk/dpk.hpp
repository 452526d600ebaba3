#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dpk/error.hpp"
#include "dpk/measure.hpp"
#include "dpk/observation.hpp"

namespace dpk {

/**
 * Jeffrey update of `prior` over the cells of `partition`:
 *
 *     P*(A) = Σ_j P(A | E_j) · m_j      (blocks and remainder)
 *
 * where the m_j are `masses`. An empty cell contributes nothing because
 * P(· | ∅) = 0. A nonempty cell with prior probability 0 has no defined
 * conditional and raises PriorNullBlock.
 */
inline ProbMeasure jeffrey_update(const ProbMeasure& prior, const Partition& partition,
                                  const PartitionMasses& masses) {
    if (partition.atom_count != prior.size())
        throw Error(ErrorKind::SpaceMismatch, "partition and prior live on different spaces");
    if (masses.block_masses.size() != partition.blocks.size())
        throw Error(ErrorKind::ShapeMismatch, std::to_string(masses.block_masses.size()) + " masses for " +
                                                  std::to_string(partition.blocks.size()) + " blocks");
    if (!is_well_formed(partition))
        throw Error(ErrorKind::ShapeMismatch, "partition does not tile the state space");
    const auto cells = partition.cells();
    const auto cell_masses = masses.cells();
    double total = 0.0;
    for (double x : cell_masses) {
        if (!std::isfinite(x) || x < 0.0)
            throw Error(ErrorKind::ShapeMismatch, "negative or non-finite cell mass");
        total += x;
    }
    if (std::abs(total - 1.0) > tol::construction)
        throw Error(ErrorKind::ShapeMismatch, "cell masses sum to " + std::to_string(total));

    std::vector<double> out(prior.size(), 0.0);
    for (std::size_t j = 0; j < cells.size(); ++j) {
        const Event& cell = cells[j];
        if (cell.empty()) {
            if (cell_masses[j] > tol::construction)
                throw Error(ErrorKind::ShapeMismatch, "positive mass assigned to an empty cell");
            continue;
        }
        const double denom = prob(prior, cell);
        if (denom <= 0.0)
            throw Error(ErrorKind::PriorNullBlock,
                        "prior gives probability 0 to nonempty cell " + std::to_string(j));
        const double scale = cell_masses[j] / denom;
        for (auto a : cell)
            out[a] = prior[a] * scale;
    }
    return ProbMeasure(std::move(out));
}

/// Current measure P_n, the partition it was built on, and the step counter n.
struct DpkState {
    ProbMeasure measure;
    Partition partition;
    std::size_t step = 0;
};

/// The prior together with the trivial partition {∅-blocks, remainder = Ω}.
inline DpkState initial_state(const ProbMeasure& prior, const ObservationModel& model) {
    if (prior.size() != model.atom_count)
        throw Error(ErrorKind::SpaceMismatch, "prior and model live on different spaces");
    return DpkState{prior, induce_partition(model, {}), 0};
}

/// One DPK step: refine by the new symbols, assign the mechanical masses, Jeffrey-update.
/// An empty batch only advances the counter.
inline DpkState dpk_step(const DpkState& state, const ObservationModel& model,
                         const std::vector<std::string>& new_symbols) {
    if (new_symbols.empty())
        return DpkState{state.measure, state.partition, state.step + 1};
    Partition refined = refine_partition(state.partition, model, new_symbols);
    PartitionMasses masses = mechanical_masses(model, refined);
    ProbMeasure next = jeffrey_update(state.measure, refined, masses);
    return DpkState{std::move(next), std::move(refined), state.step + 1};
}

enum class StopReason { terminal, tolerance, budget, schedule_exhausted };

constexpr std::string_view to_string(StopReason r) noexcept {
    switch (r) {
    case StopReason::terminal: return "terminal";
    case StopReason::tolerance: return "tolerance";
    case StopReason::budget: return "budget";
    case StopReason::schedule_exhausted: return "schedule_exhausted";
    }
    return "unknown";
}

/// Terminal detection is always on and exact. The TV tolerance is only consulted for
/// models that can never reach a terminal partition (tail symbol or uncovered atoms).
struct StopRule {
    double tolerance = 1e-10;
    std::optional<std::size_t> budget; // default: 10 · |range|

    std::size_t budget_for(const ObservationModel& model) const {
        return budget.value_or(10 * model.symbol_count());
    }
};

struct DpkTrace {
    std::vector<DpkState> states;
    std::vector<double> tv_steps;
    StopReason stop_reason = StopReason::schedule_exhausted;

    const DpkState& final_state() const { return states.back(); }
};

namespace detail {

/// Shared driver for the precise and coarsened runs.
template <class State, class Step, class Distance, class TerminalOf>
StopReason drive(std::vector<State>& states, std::vector<double>& tv_steps, const ObservationModel& model,
                 const std::vector<std::vector<std::string>>& schedule, const StopRule& stop, Step step,
                 Distance distance, TerminalOf terminal_of) {
    const std::size_t budget = stop.budget_for(model);
    const bool use_tolerance = !model.can_terminate();
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (i >= budget)
            return StopReason::budget;
        State next = step(states.back(), i);
        tv_steps.push_back(distance(states.back(), next));
        states.push_back(std::move(next));
        if (terminal_of(states.back()))
            return StopReason::terminal;
        if (use_tolerance && tv_steps.back() < stop.tolerance)
            return StopReason::tolerance;
    }
    return StopReason::schedule_exhausted;
}

} // namespace detail

/// Iterates dpk_step over the schedule until terminal, tolerance, budget, or the schedule runs out.
inline DpkTrace dpk_run(const ProbMeasure& prior, const ObservationModel& model,
                        const std::vector<std::vector<std::string>>& schedule, const StopRule& stop = {}) {
    DpkTrace trace;
    trace.states.push_back(initial_state(prior, model));
    trace.stop_reason = detail::drive(
        trace.states, trace.tv_steps, model, schedule, stop,
        [&](const DpkState& s, std::size_t i) { return dpk_step(s, model, schedule[i]); },
        [](const DpkState& a, const DpkState& b) { return tv_distance(a.measure, b.measure); },
        [](const DpkState& s) { return is_terminal(s.partition); });
    return trace;
}

/// Checks P(· | E_j) = P*(· | E_j) on atoms of every cell the posterior charges.
inline bool check_jeffrey_condition(const ProbMeasure& prior, const ProbMeasure& posterior,
                                    const Partition& partition, double tolerance = tol::construction) {
    require_same_space(prior, posterior);
    if (partition.atom_count != prior.size() || !is_well_formed(partition))
        return false;
    for (const auto& cell : partition.cells()) {
        if (cell.empty())
            continue;
        const double post_mass = prob(posterior, cell);
        if (post_mass <= 0.0)
            continue;
        const double prior_mass = prob(prior, cell);
        if (prior_mass <= 0.0)
            return false;
        for (auto a : cell)
            if (std::abs(prior[a] / prior_mass - posterior[a] / post_mass) > tolerance)
                return false;
    }
    return true;
}

/// Steps needed to exhaust the range when each step observes `batch_size` fresh symbols.
inline std::size_t steps_to_terminal(const ObservationModel& model, std::size_t batch_size) {
    require_valid(model);
    if (!model.can_terminate())
        throw Error(ErrorKind::InvalidModel, "model can never reach a terminal partition");
    if (batch_size == 0)
        throw Error(ErrorKind::ShapeMismatch, "batch size must be positive");
    return (model.observable_count() + batch_size - 1) / batch_size;
}

} // namespace dpk
