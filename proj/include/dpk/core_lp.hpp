#pragma once

// Generalized-Bayes conditional envelopes over the full core
//   core(P̲) = { P : P(B) ≥ P̲(B) for every event B }
// rather than over the generator list. The linear-fractional program
//   min / max P(A∩E) / P(E)  over the core
// becomes a linear program after the Charnes–Cooper substitution y = t·P,
// t = 1 / P(E):
//   min / max y(A∩E)  s.t.  y(E) = 1,  Σ y = t,  y(B) ≥ t·P̲(B),  y, t ≥ 0.
// It has one constraint per event, so it is only offered for small spaces and
// serves as an oracle for the gap between generator and core extremes.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dpk/credal.hpp"
#include "dpk/error.hpp"
#include "dpk/measure.hpp"

namespace dpk {

inline constexpr std::size_t kCoreLpAtomLimit = 10;

namespace detail {

/// Dense two-phase tableau simplex for  min c·x  s.t.  A x = b,  x ≥ 0,  b ≥ 0.
/// Bland's rule throughout, since the core programs are heavily degenerate.
class Simplex {
public:
    Simplex(std::vector<std::vector<double>> a, std::vector<double> b, std::vector<double> c)
        : rows_(a.size()), cols_(c.size()), a_(std::move(a)), b_(std::move(b)), c_(std::move(c)) {}

    /// Optimal x, or nullopt when infeasible. Throws on an unbounded objective.
    std::optional<std::vector<double>> solve() {
        // Reuse a unit column as the starting basic variable where one exists.
        basis_.assign(rows_, npos);
        for (std::size_t j = 0; j < cols_; ++j) {
            std::size_t unit_row = npos;
            bool unit = true;
            for (std::size_t i = 0; i < rows_ && unit; ++i) {
                if (a_[i][j] == 1.0 && unit_row == npos)
                    unit_row = i;
                else if (a_[i][j] != 0.0)
                    unit = false;
            }
            if (unit && unit_row != npos && basis_[unit_row] == npos)
                basis_[unit_row] = j;
        }
        std::size_t artificial = 0;
        for (std::size_t i = 0; i < rows_; ++i)
            if (basis_[i] == npos)
                ++artificial;
        const std::size_t total = cols_ + artificial;
        t_.assign(rows_, std::vector<double>(total + 1, 0.0));
        std::size_t next_art = cols_;
        std::vector<bool> is_art(total, false);
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t j = 0; j < cols_; ++j)
                t_[i][j] = a_[i][j];
            t_[i][total] = b_[i];
            if (basis_[i] == npos) {
                t_[i][next_art] = 1.0;
                is_art[next_art] = true;
                basis_[i] = next_art++;
            }
        }
        width_ = total;

        if (artificial > 0) {
            std::vector<double> phase1(total, 0.0);
            for (std::size_t j = cols_; j < total; ++j)
                phase1[j] = 1.0;
            run(phase1, total);
            double infeasibility = 0.0;
            for (std::size_t i = 0; i < rows_; ++i)
                if (is_art[basis_[i]])
                    infeasibility += t_[i][width_];
            if (infeasibility > 1e-9)
                return std::nullopt;
            // Drive remaining (zero-level) artificials out of the basis where possible.
            for (std::size_t i = 0; i < rows_; ++i) {
                if (!is_art[basis_[i]])
                    continue;
                for (std::size_t j = 0; j < cols_; ++j)
                    if (std::abs(t_[i][j]) > kEps) {
                        pivot(i, j);
                        break;
                    }
            }
        }
        std::vector<double> cost(total, 0.0);
        for (std::size_t j = 0; j < cols_; ++j)
            cost[j] = c_[j];
        run(cost, cols_);
        std::vector<double> x(cols_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i)
            if (basis_[i] < cols_)
                x[basis_[i]] = t_[i][width_];
        return x;
    }

private:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
    static constexpr double kEps = 1e-11;

    void pivot(std::size_t r, std::size_t col) {
        const double p = t_[r][col];
        for (auto& v : t_[r])
            v /= p;
        for (std::size_t i = 0; i < rows_; ++i) {
            if (i == r)
                continue;
            const double f = t_[i][col];
            if (f == 0.0)
                continue;
            for (std::size_t j = 0; j <= width_; ++j)
                t_[i][j] -= f * t_[r][j];
        }
        basis_[r] = col;
    }

    /// Minimizes `cost` over columns [0, allowed); columns past `allowed` never enter.
    void run(const std::vector<double>& cost, std::size_t allowed) {
        for (std::size_t iter = 0; iter < 100000; ++iter) {
            std::size_t enter = npos;
            for (std::size_t j = 0; j < allowed && enter == npos; ++j) {
                double reduced = cost[j];
                for (std::size_t i = 0; i < rows_; ++i)
                    reduced -= cost[basis_[i]] * t_[i][j];
                if (reduced < -kEps)
                    enter = j;
            }
            if (enter == npos)
                return;
            std::size_t leave = npos;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < rows_; ++i) {
                if (t_[i][enter] <= kEps)
                    continue;
                const double ratio = t_[i][width_] / t_[i][enter];
                if (ratio < best - kEps || (std::abs(ratio - best) <= kEps && basis_[i] < basis_[leave])) {
                    best = ratio;
                    leave = i;
                }
            }
            if (leave == npos)
                throw Error(ErrorKind::NullEnvelope, "core program is unbounded");
            pivot(leave, enter);
        }
        throw Error(ErrorKind::BudgetExceeded, "simplex iteration limit reached");
    }

    std::size_t rows_;
    std::size_t cols_;
    std::vector<std::vector<double>> a_;
    std::vector<double> b_;
    std::vector<double> c_;
    std::vector<std::vector<double>> t_;
    std::vector<std::size_t> basis_;
    std::size_t width_ = 0;
};

/// min (sign = +1) or max (sign = −1) of P(A∩E)/P(E) over the core; also returns the optimizer.
inline std::pair<double, ProbMeasure> core_extreme(const CredalSet& set, const Event& a, const Event& e, double sign) {
    const std::size_t m = set.atom_count();
    const EnvelopeTable env(set);
    const std::uint64_t full = (std::uint64_t{1} << m) - 1;
    const std::uint64_t e_mask = e.to_mask();
    const std::uint64_t ae_mask = a.intersect(e).to_mask();

    // Columns: y_0..y_{m-1}, t, then one surplus per event row.
    std::vector<std::uint64_t> rows_events;
    for (std::uint64_t mask = 1; mask < full; ++mask)
        if (env.lower[mask] > 0.0)
            rows_events.push_back(mask);
    const std::size_t cols = m + 1 + rows_events.size();
    std::vector<std::vector<double>> A;
    std::vector<double> b;

    std::vector<double> row(cols, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        row[i] = ((e_mask >> i) & 1u) ? 1.0 : 0.0;
    A.push_back(row);
    b.push_back(1.0);

    std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i)
        row[i] = 1.0;
    row[m] = -1.0;
    A.push_back(row);
    b.push_back(0.0);

    // −y(B) + t·P̲(B) + s_B = 0, so s_B starts basic.
    for (std::size_t r = 0; r < rows_events.size(); ++r) {
        std::fill(row.begin(), row.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i)
            if ((rows_events[r] >> i) & 1u)
                row[i] = -1.0;
        row[m] = env.lower[rows_events[r]];
        row[m + 1 + r] = 1.0;
        A.push_back(row);
        b.push_back(0.0);
    }

    std::vector<double> c(cols, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        if ((ae_mask >> i) & 1u)
            c[i] = sign;

    Simplex lp(std::move(A), std::move(b), std::move(c));
    auto x = lp.solve();
    if (!x)
        throw Error(ErrorKind::NullEnvelope, "core program is infeasible");
    const double t = (*x)[m];
    if (t <= 0.0)
        throw Error(ErrorKind::NullEnvelope, "degenerate core program");
    double value = 0.0;
    std::vector<double> p(m);
    for (std::size_t i = 0; i < m; ++i) {
        p[i] = std::max(0.0, (*x)[i] / t);
        if ((ae_mask >> i) & 1u)
            value += (*x)[i];
    }
    double s = 0.0;
    for (double v : p)
        s += v;
    for (double& v : p)
        v /= s;
    return {value, ProbMeasure(std::move(p))};
}

} // namespace detail

/// Generalized-Bayes conditional envelopes of A given E over the whole core, m ≤ 10.
/// Requires P̲(E) > 0 so that every core member charges E.
inline ConditionalBounds core_gen_bayes_bounds(const CredalSet& set, const Event& a, const Event& e) {
    const std::size_t m = set.atom_count();
    if (m > kCoreLpAtomLimit)
        throw Error(ErrorKind::BudgetExceeded, "core program limited to " + std::to_string(kCoreLpAtomLimit) + " atoms");
    if (e.empty())
        return ConditionalBounds{0.0, 0.0, ConditionalRule::generalized_bayes};
    if (lower_prob(set, e) <= 0.0)
        throw Error(ErrorKind::NullEnvelope, "some core member gives the conditioner probability 0");
    const auto lo = detail::core_extreme(set, a, e, 1.0);
    const auto hi = detail::core_extreme(set, a, e, -1.0);
    return ConditionalBounds{lo.first, hi.first, ConditionalRule::generalized_bayes};
}

/// The core member attaining the lower (or upper) conditional envelope.
inline ProbMeasure core_conditional_argext(const CredalSet& set, const Event& a, const Event& e, bool lower) {
    if (set.atom_count() > kCoreLpAtomLimit)
        throw Error(ErrorKind::BudgetExceeded, "core program limited to " + std::to_string(kCoreLpAtomLimit) + " atoms");
    if (e.empty() || lower_prob(set, e) <= 0.0)
        throw Error(ErrorKind::NullEnvelope, "conditioner must have positive lower probability");
    return detail::core_extreme(set, a, e, lower ? 1.0 : -1.0).second;
}

} // namespace dpk
