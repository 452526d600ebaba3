#pragma once

// Report builders behind the command-line front end. Every run yields a JSON
// document with one record per state (record 0 is the prior) and a flat CSV
// table with one row per record. Numbers are rounded to 12 significant digits.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpk/credal.hpp"
#include "dpk/dipk.hpp"
#include "dpk/dpk.hpp"
#include "dpk/io.hpp"
#include "dpk/survey.hpp"

namespace dpk::io {

struct RunFlags {
    std::optional<double> tolerance; // overrides the config
    bool sweep_events = false;       // or-ed with the config option
    std::optional<std::uint64_t> seed;
};

struct Report {
    json doc;
    std::string csv;
};

inline constexpr std::size_t kSweepAtomLimit = 12;
inline constexpr std::size_t kHullSamples = 16;

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i)
        out += (i ? sep : "") + parts[i];
    return out;
}

inline std::string csv_row(const std::vector<std::string>& fields) {
    std::vector<std::string> quoted;
    for (const auto& f : fields)
        quoted.push_back(csv_field(f));
    return join(quoted, ",") + "\n";
}

inline json rounded(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v)
        out.push_back(round12(x));
    return out;
}

inline json rounded(const ProbMeasure& p) { return rounded(std::vector<double>(p.masses().begin(), p.masses().end())); }

inline std::vector<double> cell_probs(const ProbMeasure& p, const Partition& partition) {
    std::vector<double> out;
    for (const auto& c : partition.cells())
        out.push_back(prob(p, c));
    return out;
}

inline json partition_summary(const Partition& p, const ObservationModel& model) {
    json blocks = json::array();
    for (const auto& group : p.block_symbols) {
        std::vector<std::string> names;
        for (auto s : group)
            names.push_back(model.symbols[s]);
        blocks.push_back(names);
    }
    return json{{"blocks", blocks}, {"remainder_size", p.remainder.size()}, {"terminal", is_terminal(p)}};
}

inline StopRule stop_rule(const SessionConfig& cfg, const RunFlags& flags) {
    StopRule rule;
    rule.tolerance = flags.tolerance.value_or(cfg.options.tolerance);
    rule.budget = cfg.options.budget;
    return rule;
}

/// Stages for a coarsened run: one per stream line, plus trailing stages with
/// empty batches when the coarsening list is longer than the stream.
inline std::vector<SurveyStage> survey_stages(const SessionConfig& cfg,
                                              const std::vector<std::vector<std::string>>& stream) {
    if (cfg.options.coarsening.size() < stream.size())
        throw ConfigError("coarsening lists " + std::to_string(cfg.options.coarsening.size()) + " stages for " +
                          std::to_string(stream.size()) + " stream batches");
    std::vector<SurveyStage> stages;
    for (std::size_t i = 0; i < cfg.options.coarsening.size(); ++i)
        stages.push_back(SurveyStage{i < stream.size() ? stream[i] : std::vector<std::string>{},
                                     cfg.options.coarsening[i]});
    return stages;
}

inline Report coarse_dpk_report(const SessionConfig& cfg, const std::vector<std::vector<std::string>>& stream) {
    const auto stages = survey_stages(cfg, stream);
    const auto coarse = coarse_dpk_run(*cfg.prior, cfg.model, stages);
    std::vector<DpkState> fine{initial_state(*cfg.prior, cfg.model)};
    for (const auto& stage : stages)
        fine.push_back(dpk_step(fine.back(), cfg.model, stage.symbols));

    Report r;
    r.doc["mode"] = "dpk-coarsened";
    std::vector<std::string> header{"step", "batch", "coarse_blocks", "remainder_mass", "tv_step", "tv_to_fine",
                                    "max_block_gap"};
    for (const auto& q : cfg.options.queries)
        header.push_back(q.name);
    r.csv = csv_row(header);
    json records = json::array();
    for (std::size_t n = 0; n < coarse.size(); ++n) {
        const auto& s = coarse[n];
        const auto coarse_cells = s.coarse.cells();
        double gap = 0.0;
        json agreement = json::array();
        for (const auto& cell : coarse_cells) {
            const double c = prob(s.measure, cell);
            const double f = prob(fine[n].measure, cell);
            gap = std::max(gap, std::abs(c - f));
            agreement.push_back({{"coarse", round12(c)}, {"fine", round12(f)}});
        }
        const double tv_fine = tv_distance(s.measure, fine[n].measure);
        json rec;
        rec["step"] = n;
        rec["batch"] = n == 0 ? std::vector<std::string>{} : stages[n - 1].symbols;
        rec["coarse_partition"] = partition_summary(s.coarse, cfg.model);
        rec["fine_partition"] = partition_summary(s.fine, cfg.model);
        rec["cell_masses"] = rounded(cell_probs(s.measure, s.coarse));
        rec["agreement"] = agreement;
        rec["max_block_gap"] = round12(gap);
        rec["tv_to_fine"] = round12(tv_fine);
        rec["tv_step"] = n == 0 ? json(nullptr) : json(round12(tv_distance(coarse[n - 1].measure, s.measure)));
        json queries = json::object();
        std::vector<std::string> row{std::to_string(n), join(rec["batch"].get<std::vector<std::string>>(), " "),
                                     std::to_string(s.coarse.blocks.size()),
                                     format12(prob(s.measure, s.coarse.remainder)),
                                     n == 0 ? "" : format12(rec["tv_step"].get<double>()), format12(tv_fine),
                                     format12(gap)};
        for (const auto& q : cfg.options.queries) {
            const double v = prob(s.measure, q.event);
            queries[q.name] = round12(v);
            row.push_back(format12(v));
        }
        rec["queries"] = queries;
        rec["measure"] = rounded(s.measure);
        records.push_back(rec);
        r.csv += csv_row(row);
    }
    r.doc["records"] = records;
    r.doc["stop_reason"] = is_terminal(coarse.back().coarse) ? "terminal" : "schedule_exhausted";
    r.doc["final_tv_to_fine"] = round12(tv_distance(coarse.back().measure, fine.back().measure));
    return r;
}

} // namespace detail

/// Replays `stream` through the precise engine. With coarsening options the
/// measure is updated against the coarse partitions and compared with the fine run.
inline Report run_dpk_report(const SessionConfig& cfg, const std::vector<std::vector<std::string>>& stream,
                             const RunFlags& flags = {}) {
    if (!cfg.prior)
        throw ConfigError("run-dpk needs a 'prior'");
    if (flags.sweep_events || cfg.options.sweep_events)
        throw ConfigError("event sweeps apply to run-dipk only");
    if (!cfg.options.coarsening.empty()) {
        Report r = detail::coarse_dpk_report(cfg, stream);
        if (flags.seed)
            r.doc["self_check"] = {{"seed", *flags.seed}, {"note", "no randomized check for coarsened runs"}};
        return r;
    }

    const DpkTrace trace = dpk_run(*cfg.prior, cfg.model, stream, detail::stop_rule(cfg, flags));
    Report r;
    r.doc["mode"] = "dpk";
    std::vector<std::string> header{"step", "batch", "blocks", "remainder_mass", "tv_step"};
    for (const auto& q : cfg.options.queries)
        header.push_back(q.name);
    r.csv = detail::csv_row(header);
    json records = json::array();
    for (std::size_t n = 0; n < trace.states.size(); ++n) {
        const auto& s = trace.states[n];
        json rec;
        rec["step"] = n;
        rec["batch"] = n == 0 ? std::vector<std::string>{} : stream[n - 1];
        rec["partition"] = detail::partition_summary(s.partition, cfg.model);
        const auto cells = detail::cell_probs(s.measure, s.partition);
        rec["block_masses"] = detail::rounded(std::vector<double>(cells.begin(), cells.end() - 1));
        rec["remainder_mass"] = round12(cells.back());
        rec["tv_step"] = n == 0 ? json(nullptr) : json(round12(trace.tv_steps[n - 1]));
        json queries = json::object();
        std::vector<std::string> row{std::to_string(n), detail::join(rec["batch"].get<std::vector<std::string>>(), " "),
                                     std::to_string(s.partition.blocks.size()), format12(cells.back()),
                                     n == 0 ? "" : format12(trace.tv_steps[n - 1])};
        for (const auto& q : cfg.options.queries) {
            const double v = prob(s.measure, q.event);
            queries[q.name] = round12(v);
            row.push_back(format12(v));
        }
        rec["queries"] = queries;
        rec["measure"] = detail::rounded(s.measure);
        records.push_back(rec);
        r.csv += detail::csv_row(row);
    }
    r.doc["records"] = records;
    r.doc["stop_reason"] = std::string(to_string(trace.stop_reason));

    if (flags.seed) {
        // Replay the observed symbols in a random order and random batch sizes;
        // the limit depends only on the final partition.
        std::mt19937_64 rng(*flags.seed);
        std::vector<std::string> symbols;
        for (std::size_t i = 0; i + 1 < trace.states.size(); ++i)
            symbols.insert(symbols.end(), stream[i].begin(), stream[i].end());
        std::shuffle(symbols.begin(), symbols.end(), rng);
        std::vector<std::vector<std::string>> shuffled;
        for (std::size_t i = 0; i < symbols.size();) {
            const std::size_t take = std::uniform_int_distribution<std::size_t>(1, symbols.size() - i)(rng);
            shuffled.emplace_back(symbols.begin() + static_cast<std::ptrdiff_t>(i),
                                  symbols.begin() + static_cast<std::ptrdiff_t>(i + take));
            i += take;
        }
        StopRule exhaustive{0.0, shuffled.size() + 1};
        const DpkTrace replay = dpk_run(*cfg.prior, cfg.model, shuffled, exhaustive);
        const double gap = tv_distance(replay.final_state().measure, trace.final_state().measure);
        r.doc["self_check"] = {{"seed", *flags.seed},
                               {"replay_batches", shuffled.size()},
                               {"limit_tv", round12(gap)},
                               {"passed", gap <= 1e-12}};
    }
    return r;
}

/// Replays `stream` through the imprecise engine with envelope, bound, and behavior columns per query.
inline Report run_dipk_report(const SessionConfig& cfg, const std::vector<std::vector<std::string>>& stream,
                              const RunFlags& flags = {}) {
    if (cfg.generators.empty())
        throw ConfigError("run-dipk needs 'generators'");
    if (!cfg.options.coarsening.empty())
        throw ConfigError("coarsening applies to run-dpk only");
    const bool sweep = flags.sweep_events || cfg.options.sweep_events;
    if (sweep && cfg.space.size() > kSweepAtomLimit)
        throw ConfigError("event sweeps need at most " + std::to_string(kSweepAtomLimit) + " atoms");

    const CredalSet prior(cfg.generators);
    const DipkTrace trace = dipk_run(prior, cfg.model, stream, detail::stop_rule(cfg, flags));

    // Hull samples for the randomized check: random mixtures of the prior generators.
    std::vector<DpkState> samples;
    std::mt19937_64 rng(flags.seed.value_or(0));
    if (flags.seed) {
        std::gamma_distribution<double> gamma(1.0, 1.0);
        for (std::size_t t = 0; t < kHullSamples; ++t) {
            std::vector<double> w(prior.size());
            double total = 0.0;
            for (double& x : w)
                total += (x = gamma(rng));
            for (double& x : w)
                x /= total;
            samples.push_back(initial_state(convex_combine(w, prior.generators()), cfg.model));
        }
    }
    std::size_t sample_checks = 0;
    std::size_t sample_violations = 0;

    Report r;
    r.doc["mode"] = "dipk";
    r.doc["generators"] = prior.size();
    r.doc["duplicate_generators"] = prior.has_duplicates();
    std::vector<std::string> header{"step", "batch", "hausdorff_step", "hausdorff_to_final"};
    for (const auto& q : cfg.options.queries)
        for (const char* col : {"_lower", "_upper", "_bound_lower", "_bound_upper", "_behavior"})
            header.push_back(q.name + col);
    r.csv = detail::csv_row(header);

    json records = json::array();
    for (std::size_t n = 0; n < trace.states.size(); ++n) {
        const auto& s = trace.states[n];
        json rec;
        rec["step"] = n;
        rec["batch"] = n == 0 ? std::vector<std::string>{} : stream[n - 1];
        rec["partition"] = detail::partition_summary(s.partition, cfg.model);
        rec["hausdorff_step"] = n == 0 ? json(nullptr) : json(round12(trace.hausdorff_steps[n - 1]));
        rec["hausdorff_to_final"] = round12(trace.hausdorff_to_final[n]);
        std::vector<std::string> row{std::to_string(n), detail::join(rec["batch"].get<std::vector<std::string>>(), " "),
                                     n == 0 ? "" : format12(trace.hausdorff_steps[n - 1]),
                                     format12(trace.hausdorff_to_final[n])};

        std::optional<PartitionMasses> masses;
        if (n > 0)
            masses = mechanical_masses(cfg.model, s.partition);
        if (n > 0)
            for (auto& smp : samples)
                smp = dpk_step(smp, cfg.model, stream[n - 1]);

        json queries = json::object();
        for (const auto& q : cfg.options.queries) {
            json qj;
            const double lo = lower_prob(s.set, q.event);
            const double hi = upper_prob(s.set, q.event);
            qj["lower"] = round12(lo);
            qj["upper"] = round12(hi);
            row.push_back(format12(lo));
            row.push_back(format12(hi));
            if (n == 0) {
                row.insert(row.end(), {"", "", ""});
                queries[q.name] = qj;
                continue;
            }
            const CredalSet& prev = trace.states[n - 1].set;
            const BoundPair b = jeffrey_bounds(prev, s.partition, *masses, q.event);
            qj["bound_lower"] = round12(b.lower);
            qj["bound_upper"] = round12(b.upper);
            qj["bounds_hold"] = b.lower <= lo + tol::comparison && b.upper >= hi - tol::comparison;
            try {
                const auto g = geometric_jeffrey_bounds(prev, s.partition, *masses, q.event);
                qj["geometric"] = {{"lower", round12(g.lower)},
                                   {"upper", round12(g.upper)},
                                   {"assumption_held", g.assumption_held}};
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::NullEnvelope)
                    throw;
                qj["geometric"] = nullptr;
            }
            const BehaviorReport beh = classify_behavior(prev, s.set, q.event);
            qj["behavior"] = std::string(to_string(beh.classification));
            const SufficientTest con = sufficient_contraction(prev, s.partition, *masses, q.event);
            const SufficientTest loss = sufficient_sure_loss(prev, s.partition, *masses, q.event);
            qj["sufficient_contraction"] = {{"guaranteed", bool(con)}, {"confirmed", beh.contracts}};
            qj["sufficient_sure_loss"] = {{"guaranteed", bool(loss)}, {"confirmed", beh.sure_loss}};
            for (const auto& smp : samples) {
                const double v = prob(smp.measure, q.event);
                ++sample_checks;
                if (v < b.lower - tol::comparison || v > b.upper + tol::comparison)
                    ++sample_violations;
            }
            row.push_back(format12(b.lower));
            row.push_back(format12(b.upper));
            row.push_back(std::string(to_string(beh.classification)));
            queries[q.name] = qj;
        }
        rec["queries"] = queries;
        if (sweep && n > 0) {
            std::map<std::string, std::size_t> counts;
            for (const auto& rep : sweep_behavior(trace.states[n - 1].set, s.set))
                ++counts[std::string(to_string(rep.classification))];
            rec["sweep"] = counts;
        }
        json gens = json::array();
        for (const auto& g : s.set)
            gens.push_back(detail::rounded(g));
        rec["generators"] = gens;
        records.push_back(rec);
        r.csv += detail::csv_row(row);
    }
    r.doc["records"] = records;
    r.doc["stop_reason"] = std::string(to_string(trace.stop_reason));
    if (flags.seed)
        r.doc["self_check"] = {{"seed", *flags.seed},
                               {"hull_samples", samples.size()},
                               {"checks", sample_checks},
                               {"violations", sample_violations},
                               {"passed", sample_violations == 0}};
    return r;
}

} // namespace dpk::io
