#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dpk/error.hpp"
#include "dpk/measure.hpp"

namespace dpk {

/**
 * The observation mechanism: a finite symbol range, its known pmf, and the
 * preimage of every symbol in the atom space.
 *
 * Preimages must be pairwise disjoint but need not cover the space; atoms
 * outside every preimage stay in the remainder forever. A designated tail
 * symbol (positive pmf, never observable) stands in for the unobserved part
 * of a countably infinite range, so the remainder never empties.
 *
 * The struct itself is unchecked; validate_model() lists what is wrong with
 * it and every engine entry point rejects invalid models.
 */
struct ObservationModel {
    std::size_t atom_count = 0;
    std::vector<std::string> symbols;
    std::vector<double> pmf;
    std::vector<Event> preimages;
    std::optional<std::size_t> tail_symbol;

    std::size_t symbol_count() const noexcept { return symbols.size(); }

    std::optional<std::size_t> index_of(const std::string& symbol) const {
        auto it = std::find(symbols.begin(), symbols.end(), symbol);
        if (it == symbols.end())
            return std::nullopt;
        return static_cast<std::size_t>(it - symbols.begin());
    }

    std::size_t require_index(const std::string& symbol) const {
        auto idx = index_of(symbol);
        if (!idx)
            throw Error(ErrorKind::UnknownSymbol, "symbol '" + symbol + "' is not in the model's range");
        return *idx;
    }

    bool covers_space() const {
        std::size_t covered = 0;
        for (const auto& e : preimages)
            covered += e.size();
        return covered == atom_count;
    }

    /// Whether observing every observable symbol empties the remainder.
    bool can_terminate() const { return !tail_symbol && covers_space(); }

    /// Number of symbols a schedule can actually observe.
    std::size_t observable_count() const { return symbols.size() - (tail_symbol ? 1 : 0); }

    bool operator==(const ObservationModel&) const = default;
};

/// Every violated model invariant, one message each; empty when the model is valid.
inline std::vector<std::string> validate_model(const ObservationModel& model) {
    std::vector<std::string> out;
    const std::size_t k = model.symbols.size();
    if (model.atom_count == 0)
        out.emplace_back("state space is empty");
    if (k == 0)
        out.emplace_back("symbol range is empty");
    if (model.pmf.size() != k || model.preimages.size() != k)
        out.emplace_back("pmf and preimage lists must have one entry per symbol");

    std::unordered_set<std::string> seen;
    for (const auto& s : model.symbols) {
        if (!seen.insert(s).second)
            out.push_back("duplicate symbol '" + s + "'");
        if (s.empty() || s.find_first_of(" \t\r\n,") != std::string::npos)
            out.push_back("symbol '" + s + "' is empty or contains whitespace or commas");
    }

    double total = 0.0;
    for (std::size_t j = 0; j < model.pmf.size(); ++j) {
        const double p = model.pmf[j];
        if (!std::isfinite(p) || p <= 0.0)
            out.push_back("nonpositive pmf for symbol " + std::to_string(j));
        total += p;
    }
    if (!model.pmf.empty() && std::abs(total - 1.0) > tol::construction)
        out.push_back("pmf sum != 1 (got " + std::to_string(total) + ")");

    std::vector<int> owner(model.atom_count, -1);
    bool overlap = false;
    for (std::size_t j = 0; j < model.preimages.size(); ++j) {
        const Event& e = model.preimages[j];
        if (e.empty())
            out.push_back("empty preimage for symbol " + std::to_string(j));
        for (auto a : e) {
            if (a >= model.atom_count) {
                out.push_back("preimage of symbol " + std::to_string(j) + " leaves the state space");
                break;
            }
            if (owner[a] >= 0)
                overlap = true;
            owner[a] = static_cast<int>(j);
        }
    }
    if (overlap)
        out.emplace_back("preimages overlap");

    if (model.tail_symbol && *model.tail_symbol >= k)
        out.emplace_back("tail symbol index out of range");
    return out;
}

inline void require_valid(const ObservationModel& model) {
    auto violations = validate_model(model);
    if (!violations.empty()) {
        std::string msg = violations.front();
        for (std::size_t i = 1; i < violations.size(); ++i)
            msg += "; " + violations[i];
        throw Error(ErrorKind::InvalidModel, msg);
    }
}

/// Blocks in observation order plus the remainder. Each block records the
/// symbols whose preimages make it up (exactly one, unless coarsened).
struct Partition {
    std::size_t atom_count = 0;
    std::vector<Event> blocks;
    std::vector<std::vector<std::size_t>> block_symbols;
    Event remainder;

    std::size_t block_count() const noexcept { return blocks.size(); }

    /// Symbols observed so far, block by block.
    std::vector<std::size_t> observed() const {
        std::vector<std::size_t> out;
        for (const auto& group : block_symbols)
            out.insert(out.end(), group.begin(), group.end());
        return out;
    }

    bool has_observed(std::size_t symbol) const {
        for (const auto& group : block_symbols)
            if (std::find(group.begin(), group.end(), symbol) != group.end())
                return true;
        return false;
    }

    /// Blocks followed by the remainder.
    std::vector<Event> cells() const {
        std::vector<Event> out = blocks;
        out.push_back(remainder);
        return out;
    }

    bool operator==(const Partition&) const = default;
};

struct PartitionMasses {
    std::vector<double> block_masses;
    double remainder_mass = 1.0;

    double total() const {
        double s = remainder_mass;
        for (double x : block_masses)
            s += x;
        return s;
    }

    /// Block masses followed by the remainder mass.
    std::vector<double> cells() const {
        std::vector<double> out = block_masses;
        out.push_back(remainder_mass);
        return out;
    }

    bool operator==(const PartitionMasses&) const = default;
};

/// Blocks nonempty and pairwise disjoint, and together with the remainder they tile the space.
inline bool is_well_formed(const Partition& p) {
    if (p.blocks.size() != p.block_symbols.size())
        return false;
    std::vector<char> hit(p.atom_count, 0);
    auto mark = [&](const Event& e) {
        for (auto a : e) {
            if (a >= p.atom_count || hit[a])
                return false;
            hit[a] = 1;
        }
        return true;
    };
    for (const auto& b : p.blocks)
        if (b.empty() || !mark(b))
            return false;
    if (!mark(p.remainder))
        return false;
    return std::all_of(hit.begin(), hit.end(), [](char c) { return c != 0; });
}

namespace detail {

inline std::vector<std::size_t> dedup_symbols(const ObservationModel& model, const std::vector<std::string>& symbols) {
    std::vector<std::size_t> out;
    for (const auto& s : symbols) {
        const std::size_t idx = model.require_index(s);
        if (model.tail_symbol && *model.tail_symbol == idx)
            throw Error(ErrorKind::UnknownSymbol, "tail symbol '" + s + "' is never observable");
        if (std::find(out.begin(), out.end(), idx) == out.end())
            out.push_back(idx);
    }
    return out;
}

inline Partition carve(Partition p, const ObservationModel& model, const std::vector<std::size_t>& fresh) {
    for (auto idx : fresh) {
        p.blocks.push_back(model.preimages[idx]);
        p.block_symbols.push_back({idx});
        p.remainder = p.remainder.minus(model.preimages[idx]);
    }
    return p;
}

/// Throws ModelMismatch unless every block is exactly the union of its symbols' preimages.
inline void check_generated_by(const Partition& p, const ObservationModel& model) {
    if (p.atom_count != model.atom_count || p.blocks.size() != p.block_symbols.size())
        throw Error(ErrorKind::ModelMismatch, "partition and model disagree on shape");
    for (std::size_t j = 0; j < p.blocks.size(); ++j) {
        Event expected;
        for (auto s : p.block_symbols[j]) {
            if (s >= model.symbol_count())
                throw Error(ErrorKind::ModelMismatch, "block refers to an unknown symbol index");
            expected = expected.unite(model.preimages[s]);
        }
        if (!(expected == p.blocks[j]))
            throw Error(ErrorKind::ModelMismatch, "block " + std::to_string(j) + " is not its symbols' preimage");
    }
}

} // namespace detail

/// Partition induced by a set of observed symbols (deduplicated, first occurrence kept).
inline Partition induce_partition(const ObservationModel& model, const std::vector<std::string>& observed) {
    require_valid(model);
    Partition p;
    p.atom_count = model.atom_count;
    p.remainder = Event::full(model.atom_count);
    return detail::carve(std::move(p), model, detail::dedup_symbols(model, observed));
}

/// Carves the preimages of `new_symbols` out of the remainder; existing blocks are untouched.
inline Partition refine_partition(const Partition& partition, const ObservationModel& model,
                                  const std::vector<std::string>& new_symbols) {
    require_valid(model);
    detail::check_generated_by(partition, model);
    auto fresh = detail::dedup_symbols(model, new_symbols);
    for (auto idx : fresh)
        if (partition.has_observed(idx))
            throw Error(ErrorKind::DuplicateObservation, "symbol '" + model.symbols[idx] + "' was already observed");
    return detail::carve(partition, model, fresh);
}

/// True iff every cell of `coarse` (remainder included) is a union of cells of `fine`.
inline bool is_refinement(const Partition& fine, const Partition& coarse) {
    if (fine.atom_count != coarse.atom_count)
        throw Error(ErrorKind::SpaceMismatch, "partitions over different spaces");
    std::vector<std::size_t> label(coarse.atom_count, 0);
    const auto coarse_cells = coarse.cells();
    for (std::size_t c = 0; c < coarse_cells.size(); ++c)
        for (auto a : coarse_cells[c])
            label[a] = c;
    for (const auto& cell : fine.cells()) {
        if (cell.empty())
            continue;
        const std::size_t first = label[*cell.begin()];
        for (auto a : cell)
            if (label[a] != first)
                return false;
    }
    return true;
}

inline bool is_terminal(const Partition& p) { return p.remainder.empty(); }

/// Block j gets the pmf of its symbols, the remainder gets the rest (exactly 0 once
/// every symbol of the range is observed).
inline PartitionMasses mechanical_masses(const ObservationModel& model, const Partition& partition) {
    require_valid(model);
    detail::check_generated_by(partition, model);
    PartitionMasses out;
    double used = 0.0;
    std::size_t seen = 0;
    for (const auto& group : partition.block_symbols) {
        double mass = 0.0;
        for (auto s : group)
            mass += model.pmf[s];
        out.block_masses.push_back(mass);
        used += mass;
        seen += group.size();
    }
    out.remainder_mass = seen == model.symbol_count() ? 0.0 : std::max(0.0, 1.0 - used);
    return out;
}

} // namespace dpk
