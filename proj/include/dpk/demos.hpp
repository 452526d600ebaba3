#pragma once

// Built-in instances: the Binomial(10, 0.8) mechanical example, the four-block
// noncommutativity instance, and a synthetic age × race survey.

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <string>
#include <vector>

#include "dpk/io.hpp"
#include "dpk/session.hpp"
#include "dpk/survey.hpp"

namespace dpk::demos {

struct Instance {
    io::SessionConfig config;
    std::vector<std::vector<std::string>> stream;
};

inline double binomial_pmf(int n, int k, double p) {
    double c = 1.0;
    for (int i = 1; i <= k; ++i)
        c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
    return c * std::pow(p, k) * std::pow(1.0 - p, n - k);
}

/// Atoms 0..10, symbol k with preimage {k}, flat prior, one batch {3, 5, 7}.
inline Instance binomial_example() {
    Instance inst;
    auto& cfg = inst.config;
    cfg.space = StateSpace::indexed(11);
    cfg.model.atom_count = 11;
    for (int k = 0; k <= 10; ++k) {
        cfg.model.symbols.push_back(std::to_string(k));
        cfg.model.pmf.push_back(binomial_pmf(10, k, 0.8));
        cfg.model.preimages.push_back(Event{static_cast<std::size_t>(k)});
    }
    cfg.prior = ProbMeasure::uniform(11);
    cfg.options.queries = {{"even", Event{0, 2, 4, 6, 8, 10}}};
    inst.stream = {{"3", "5", "7"}};
    return inst;
}

/// Four atoms standing for [0,1/8), [1/8,1/4), [1/4,3/4), [3/4,1] under Lebesgue
/// measure; symbol k has preimage atom k−1; A is the third atom.
inline Instance noncommutativity() {
    Instance inst;
    auto& cfg = inst.config;
    cfg.space = StateSpace({"w1", "w2", "w3", "w4"});
    cfg.model.atom_count = 4;
    cfg.model.symbols = {"1", "2", "3", "4"};
    cfg.model.pmf = {1.0 / 6, 1.0 / 3, 1.0 / 8, 3.0 / 8};
    cfg.model.preimages = {Event{0}, Event{1}, Event{2}, Event{3}};
    cfg.prior = ProbMeasure({1.0 / 8, 1.0 / 8, 1.0 / 2, 1.0 / 4});
    cfg.options.queries = {{"A", Event{2}}, {"second_block", Event{1}}};
    inst.stream = {{"1"}, {"2", "3", "4"}};
    return inst;
}

inline constexpr std::size_t kAges = 5;
inline constexpr std::size_t kRaces = 4;
inline constexpr std::size_t kSubAtoms = 2;

inline const std::vector<std::string>& age_symbols() {
    static const std::vector<std::string> v{"u18", "18-20", "21-44", "45-64", "65+"};
    return v;
}

inline const std::vector<std::string>& race_symbols() {
    static const std::vector<std::string> v{"W", "B", "A", "O"};
    return v;
}

inline std::size_t survey_atom(std::size_t age, std::size_t race, std::size_t sub) {
    return (age * kRaces + race) * kSubAtoms + sub;
}

/// Marginal model answering one question; `age` selects which.
inline ObservationModel survey_marginal(bool age) {
    ObservationModel m;
    m.atom_count = kAges * kRaces * kSubAtoms;
    const auto& names = age ? age_symbols() : race_symbols();
    const std::vector<double> pmf = age ? std::vector<double>{0.22, 0.05, 0.33, 0.25, 0.15}
                                        : std::vector<double>{0.6, 0.13, 0.07, 0.2};
    for (std::size_t v = 0; v < names.size(); ++v) {
        std::vector<std::size_t> atoms;
        for (std::size_t a = 0; a < kAges; ++a)
            for (std::size_t r = 0; r < kRaces; ++r)
                if ((age ? a : r) == v)
                    for (std::size_t s = 0; s < kSubAtoms; ++s)
                        atoms.push_back(survey_atom(a, r, s));
        m.symbols.push_back(names[v]);
        m.pmf.push_back(pmf[v]);
        m.preimages.emplace_back(std::move(atoms));
    }
    return m;
}

/**
 * 40 atoms (age × race × two sub-atoms), the product age:race model with a
 * synthetic joint pmf, a synthetic prior, and three stages: eight reports
 * read through three age bins, twelve more read through five age bins, then
 * no new reports and the full age × race partition.
 */
inline Instance survey() {
    Instance inst;
    auto& cfg = inst.config;
    const ObservationModel age = survey_marginal(true);
    const ObservationModel race = survey_marginal(false);
    std::vector<std::vector<double>> joint(kAges, std::vector<double>(kRaces));
    for (std::size_t a = 0; a < kAges; ++a)
        for (std::size_t r = 0; r < kRaces; ++r)
            joint[a][r] = age.pmf[a] * race.pmf[r];
    cfg.model = product_observation_model(age, race, joint);

    std::vector<std::string> labels;
    for (std::size_t a = 0; a < kAges; ++a)
        for (std::size_t r = 0; r < kRaces; ++r)
            for (std::size_t s = 0; s < kSubAtoms; ++s)
                labels.push_back(age_symbols()[a] + "/" + race_symbols()[r] + "/" + std::to_string(s));
    cfg.space = StateSpace(labels);

    std::vector<double> prior(labels.size());
    double total = 0.0;
    for (std::size_t i = 0; i < prior.size(); ++i)
        total += (prior[i] = 1.0 + static_cast<double>((7 * i) % 11));
    for (double& x : prior)
        x /= total;
    cfg.prior = ProbMeasure(std::move(prior));

    auto pair = [](std::size_t a, std::size_t r) { return age_symbols()[a] + ":" + race_symbols()[r]; };
    auto age_group = [&](std::size_t a) {
        std::vector<std::string> g;
        for (std::size_t r = 0; r < kRaces; ++r)
            g.push_back(pair(a, r));
        return g;
    };
    std::vector<std::string> batch1, batch2;
    for (std::size_t a : {std::size_t{0}, kAges - 1})
        for (auto& s : age_group(a))
            batch1.push_back(s);
    for (std::size_t a = 1; a + 1 < kAges; ++a)
        for (auto& s : age_group(a))
            batch2.push_back(s);
    inst.stream = {batch1, batch2};

    // Stage 1: three age bins (18-64 is still unobserved and sits in the remainder).
    std::vector<std::vector<std::string>> three{age_group(0), age_group(kAges - 1)};
    // Stage 2: five age bins.
    std::vector<std::vector<std::string>> five;
    for (std::size_t a = 0; a < kAges; ++a)
        five.push_back(age_group(a));
    // Stage 3: every age × race cell on its own.
    std::vector<std::vector<std::string>> cells;
    for (std::size_t a = 0; a < kAges; ++a)
        for (std::size_t r = 0; r < kRaces; ++r)
            cells.push_back({pair(a, r)});
    cfg.options.coarsening = {three, five, cells};

    std::vector<std::size_t> white;
    for (std::size_t a = 0; a < kAges; ++a)
        for (std::size_t s = 0; s < kSubAtoms; ++s)
            white.push_back(survey_atom(a, 0, s));
    cfg.options.queries = {{"white", Event(white)}, {"first_atom", Event{0}}};
    return inst;
}

inline std::string fixed5(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.5f", x);
    return buf;
}

/// Runs a demo by name. Throws io::ConfigError for an unknown name.
inline io::Report run_demo(const std::string& name, const io::RunFlags& flags = {}) {
    if (name == "binomial-example") {
        const Instance inst = binomial_example();
        io::Report r = io::run_dpk_report(inst.config, inst.stream, flags);
        const auto& rec = r.doc["records"].back();
        io::json masses = io::json::array();
        for (const auto& x : rec["block_masses"])
            masses.push_back(fixed5(x.get<double>()));
        masses.push_back(fixed5(rec["remainder_mass"].get<double>()));
        r.doc["demo"] = {{"name", name}, {"masses_5dp", masses}};
        return r;
    }
    if (name == "noncommutativity") {
        Instance inst = noncommutativity();
        io::Report r = io::run_dpk_report(inst.config, inst.stream, flags);
        const auto& cfg = inst.config;
        const DpkState s0 = initial_state(*cfg.prior, cfg.model);
        const DpkState s1 = dpk_step(s0, cfg.model, {"1"});
        const DpkState s2 = dpk_step(s1, cfg.model, {"2", "3", "4"});
        const DpkState t1 = dpk_step(s0, cfg.model, {"3"});
        const DpkState t2 = dpk_step(t1, cfg.model, {"1", "2", "4"});
        const Event a{2};
        const Event second{1};
        r.doc["demo"] = {
            {"name", name},
            {"prior_second_block", io::round12(prob(s0.measure, second))},
            {"order_1_then_234", {{"step1_second_block", io::round12(prob(s1.measure, second))},
                                  {"step1_A", io::round12(prob(s1.measure, a))},
                                  {"limit_A", io::round12(prob(s2.measure, a))}}},
            {"order_3_then_124", {{"step1_A", io::round12(prob(t1.measure, a))},
                                  {"limit_A", io::round12(prob(t2.measure, a))}}},
            {"limit_tv", io::round12(tv_distance(s2.measure, t2.measure))},
            {"expected", {{"step1_second_block", "5/42"}, {"step1_A", "10/21"}, {"limit_A", "1/8"}}}};
        return r;
    }
    if (name == "survey") {
        const Instance inst = survey();
        io::Report r = io::run_dpk_report(inst.config, inst.stream, flags);
        io::json table = io::json::array();
        for (const auto& rec : r.doc["records"])
            table.push_back({{"step", rec["step"]},
                             {"coarse_blocks", rec["coarse_partition"]["blocks"].size()},
                             {"max_block_gap", rec["max_block_gap"]},
                             {"tv_to_fine", rec["tv_to_fine"]}});
        r.doc["demo"] = {{"name", name}, {"agreement", table}, {"joint_pmf", "synthetic, independent age x race"}};
        return r;
    }
    throw io::ConfigError("unknown demo '" + name + "' (binomial-example, noncommutativity, survey)");
}

} // namespace dpk::demos
