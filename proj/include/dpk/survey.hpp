#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "dpk/dpk.hpp"
#include "dpk/error.hpp"
#include "dpk/measure.hpp"
#include "dpk/observation.hpp"

namespace dpk {

/// Groups of fine block indices. The fine remainder is never grouped; it
/// always becomes the coarse remainder.
struct CoarseningMap {
    std::vector<std::vector<std::size_t>> groups;

    /// Singleton groups, one per fine block.
    static CoarseningMap identity(std::size_t block_count) {
        CoarseningMap map;
        for (std::size_t j = 0; j < block_count; ++j)
            map.groups.push_back({j});
        return map;
    }

    /// Builds the map from groups of symbols. Every observed symbol must appear
    /// in exactly one group; symbols not yet observed are skipped, and groups
    /// left empty by that are dropped.
    static CoarseningMap from_symbol_groups(const Partition& fine, const ObservationModel& model,
                                            const std::vector<std::vector<std::string>>& symbol_groups) {
        std::vector<std::size_t> block_of(model.symbol_count(), fine.blocks.size());
        for (std::size_t j = 0; j < fine.block_symbols.size(); ++j)
            for (auto s : fine.block_symbols[j])
                block_of[s] = j;
        CoarseningMap map;
        for (const auto& group : symbol_groups) {
            std::vector<std::size_t> blocks;
            for (const auto& sym : group) {
                const std::size_t j = block_of[model.require_index(sym)];
                if (j < fine.blocks.size() && std::find(blocks.begin(), blocks.end(), j) == blocks.end())
                    blocks.push_back(j);
            }
            if (!blocks.empty())
                map.groups.push_back(std::move(blocks));
        }
        map.validate(fine.blocks.size());
        return map;
    }

    /// Throws InvalidCoarsening unless the groups partition {0, …, block_count − 1}.
    void validate(std::size_t block_count) const {
        std::vector<char> hit(block_count, 0);
        for (const auto& g : groups) {
            if (g.empty())
                throw Error(ErrorKind::InvalidCoarsening, "empty coarsening group");
            for (auto j : g) {
                if (j >= block_count)
                    throw Error(ErrorKind::InvalidCoarsening, "group refers to block " + std::to_string(j) +
                                                                  " of " + std::to_string(block_count));
                if (hit[j])
                    throw Error(ErrorKind::InvalidCoarsening, "block " + std::to_string(j) + " is in two groups");
                hit[j] = 1;
            }
        }
        for (std::size_t j = 0; j < block_count; ++j)
            if (!hit[j])
                throw Error(ErrorKind::InvalidCoarsening, "block " + std::to_string(j) + " is in no group");
    }

    bool operator==(const CoarseningMap&) const = default;
};

/// Coarse block k is the union of the fine blocks in group k; the remainder is kept.
inline Partition coarsen_partition(const Partition& fine, const CoarseningMap& map) {
    map.validate(fine.blocks.size());
    Partition out;
    out.atom_count = fine.atom_count;
    out.remainder = fine.remainder;
    for (const auto& g : map.groups) {
        Event block;
        std::vector<std::size_t> symbols;
        for (auto j : g) {
            block = block.unite(fine.blocks[j]);
            symbols.insert(symbols.end(), fine.block_symbols[j].begin(), fine.block_symbols[j].end());
        }
        out.blocks.push_back(std::move(block));
        out.block_symbols.push_back(std::move(symbols));
    }
    return out;
}

inline PartitionMasses coarsen_masses(const PartitionMasses& masses, const CoarseningMap& map) {
    map.validate(masses.block_masses.size());
    PartitionMasses out;
    out.remainder_mass = masses.remainder_mass;
    for (const auto& g : map.groups) {
        double s = 0.0;
        for (auto j : g)
            s += masses.block_masses[j];
        out.block_masses.push_back(s);
    }
    return out;
}

/// The measure is updated against `coarse`; `fine` keeps the observation history.
struct CoarseState {
    ProbMeasure measure;
    Partition fine;
    Partition coarse;
    std::size_t step = 0;
};

inline CoarseState initial_coarse_state(const ProbMeasure& prior, const ObservationModel& model) {
    const DpkState s = initial_state(prior, model);
    return CoarseState{s.measure, s.partition, s.partition, 0};
}

/// Refines the fine partition, coarsens it by `map`, aggregates the mechanical
/// masses, and Jeffrey-updates against the coarse partition. Unlike dpk_step an
/// empty batch still updates, since the map alone may change the partition.
inline CoarseState coarse_dpk_step(const CoarseState& state, const ObservationModel& model, const CoarseningMap& map,
                                   const std::vector<std::string>& new_symbols) {
    Partition fine = refine_partition(state.fine, model, new_symbols);
    Partition coarse = coarsen_partition(fine, map);
    const PartitionMasses masses = coarsen_masses(mechanical_masses(model, fine), map);
    ProbMeasure next = jeffrey_update(state.measure, coarse, masses);
    return CoarseState{std::move(next), std::move(fine), std::move(coarse), state.step + 1};
}

/// One survey stage: the symbols observed at that stage and the symbol groups
/// defining the coarse partition after it.
struct SurveyStage {
    std::vector<std::string> symbols;
    std::vector<std::vector<std::string>> groups;
};

/// Runs the stages in order; states[0] is the prior.
inline std::vector<CoarseState> coarse_dpk_run(const ProbMeasure& prior, const ObservationModel& model,
                                               const std::vector<SurveyStage>& stages) {
    std::vector<CoarseState> states{initial_coarse_state(prior, model)};
    for (const auto& stage : stages) {
        const Partition fine = refine_partition(states.back().fine, model, stage.symbols);
        const CoarseningMap map = CoarseningMap::from_symbol_groups(fine, model, stage.groups);
        states.push_back(coarse_dpk_step(states.back(), model, map, stage.symbols));
    }
    return states;
}

/**
 * Model for observing two questions at once. Both models live on the same
 * atom space; the symbol for the pair (x, y) is "x:y" and its preimage is the
 * intersection of the two marginal preimages. `joint_pmf[i][j]` is the mass of
 * (symbol i of m1, symbol j of m2); pairs with mass exactly 0 are not part of
 * the range, and a positive pair with an empty intersection is an error.
 */
inline ObservationModel product_observation_model(const ObservationModel& m1, const ObservationModel& m2,
                                                  const std::vector<std::vector<double>>& joint_pmf) {
    require_valid(m1);
    require_valid(m2);
    if (m1.atom_count != m2.atom_count)
        throw Error(ErrorKind::SpaceMismatch, "marginal models live on different spaces");
    if (m1.tail_symbol || m2.tail_symbol)
        throw Error(ErrorKind::InvalidModel, "marginal models with a tail symbol have no finite product");
    if (joint_pmf.size() != m1.symbol_count())
        throw Error(ErrorKind::ShapeMismatch, "joint pmf needs one row per symbol of the first model");
    ObservationModel out;
    out.atom_count = m1.atom_count;
    for (std::size_t i = 0; i < m1.symbol_count(); ++i) {
        if (joint_pmf[i].size() != m2.symbol_count())
            throw Error(ErrorKind::ShapeMismatch, "joint pmf needs one column per symbol of the second model");
        for (std::size_t j = 0; j < m2.symbol_count(); ++j) {
            const double p = joint_pmf[i][j];
            if (p == 0.0)
                continue;
            if (!(p > 0.0))
                throw Error(ErrorKind::InvalidModel, "negative joint pmf entry");
            Event pre = m1.preimages[i].intersect(m2.preimages[j]);
            const std::string name = m1.symbols[i] + ":" + m2.symbols[j];
            if (pre.empty())
                throw Error(ErrorKind::EmptyPreimage, "pair " + name + " has an empty preimage");
            out.symbols.push_back(name);
            out.pmf.push_back(p);
            out.preimages.push_back(std::move(pre));
        }
    }
    require_valid(out);
    return out;
}

} // namespace dpk
