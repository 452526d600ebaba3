// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dpk/all.hpp"
#include "dpk/demos.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace dpk;
using dpk::gen::Rng;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double limit_seconds, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string detail = o.detail;
    if (limit_seconds > 0 && secs >= limit_seconds) {
        o.pass = false;
        detail += "; over the " + std::to_string(limit_seconds) + " s limit";
    }
    if (!o.pass)
        ++failures;
    std::printf("%s  %2d  %-34s %8.3f s  %s\n", o.pass ? "PASS" : "FAIL", id, title, secs, detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<oracle::Mask> cell_masks(const Partition& p) {
    std::vector<oracle::Mask> out;
    for (const auto& c : p.cells())
        out.push_back(oracle::to_mask(c));
    return out;
}

std::vector<std::size_t> observed_indices(const ObservationModel& model,
                                          const std::vector<std::vector<std::string>>& batches, std::size_t upto) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < upto; ++i)
        for (const auto& s : batches[i])
            idx.push_back(*model.index_of(s));
    return idx;
}

const StopRule kExhaustive{0.0, std::nullopt};

Outcome binomial() {
    const auto inst = demos::binomial_example();
    const auto masses = mechanical_masses(inst.config.model, induce_partition(inst.config.model, inst.stream[0]));
    const double expected[] = {0.00079, 0.02642, 0.20133, 0.77146};
    const double got[] = {masses.block_masses[0], masses.block_masses[1], masses.block_masses[2],
                          masses.remainder_mass};
    bool ok = true;
    std::string shown;
    for (int i = 0; i < 4; ++i) {
        ok = ok && std::round(got[i] * 1e5) == std::round(expected[i] * 1e5);
        shown += fmt("%s%.5f", i ? " " : "", got[i]);
    }
    ok = ok && std::abs(masses.block_masses[0] - 0.000786432) < 1e-15 &&
         std::abs(masses.block_masses[1] - 0.0264241152) < 1e-15 &&
         std::abs(masses.block_masses[2] - 0.201326592) < 1e-15;
    return {ok, "masses " + shown};
}

Outcome noncommutative() {
    const auto cfg = demos::noncommutativity().config;
    const auto& model = cfg.model;
    const auto s0 = initial_state(*cfg.prior, model);
    const auto s1 = dpk_step(s0, model, {"1"});
    const auto s2 = dpk_step(s1, model, {"2", "3", "4"});
    const auto t1 = dpk_step(s0, model, {"3"});
    const auto t2 = dpk_step(t1, model, {"1", "2", "4"});
    const Event a{2};
    const double e1 = std::abs(prob(s1.measure, Event{1}) - 5.0 / 42);
    const double e2 = std::abs(prob(s1.measure, a) - 10.0 / 21);
    const double e3 = std::abs(prob(s2.measure, a) - 1.0 / 8);
    const double e4 = std::abs(prob(t1.measure, a) - 1.0 / 8);
    const double e5 = std::abs(prob(t2.measure, a) - 1.0 / 8);
    const double lim = tv_distance(s2.measure, t2.measure);
    const double worst = std::max({e1, e2, e3, e4, e5, lim});
    return {worst <= 1e-12, fmt("5/42, 10/21, 1/8, 1/8, 1/8 and shared limit; max error %.2e", worst)};
}

/// The corpus for criteria 3 and 4: full runs, one check per step.
struct PosteriorCorpus {
    std::size_t updates = 0;
    std::size_t bad_validity = 0;
    std::size_t bad_jeffrey = 0;
    std::size_t bad_agreement = 0;
    std::size_t bad_masses = 0;
    std::size_t zero_cells = 0;
    std::size_t empty_cells = 0;
    double worst_sum = 0.0;
    double worst_agreement = 0.0;
};

const PosteriorCorpus& posterior_corpus() {
    static const PosteriorCorpus corpus = [] {
        PosteriorCorpus c;
        Rng rng(1003);
        while (c.updates < 1000) {
            const std::size_t m = gen::uniform_index(rng, 1, 10);
            const std::size_t k = gen::uniform_index(rng, 1, std::min<std::size_t>(m, 8));
            const auto model = gen::random_model(rng, m, k);
            const auto prior = gen::random_measure(rng, m);
            const auto schedule = gen::random_schedule(rng, model);
            const auto trace = dpk_run(prior, model, schedule, kExhaustive);
            for (std::size_t n = 1; n < trace.states.size() && c.updates < 1000; ++n, ++c.updates) {
                const auto& s = trace.states[n];
                double total = 0.0;
                bool nonneg = true;
                for (double x : s.measure.masses()) {
                    total += x;
                    nonneg = nonneg && x >= 0.0;
                }
                c.worst_sum = std::max(c.worst_sum, std::abs(total - 1.0));
                if (!nonneg || std::abs(total - 1.0) > 1e-9)
                    ++c.bad_validity;
                if (!check_jeffrey_condition(prior, s.measure, s.partition))
                    ++c.bad_jeffrey;

                const auto masses = mechanical_masses(model, s.partition).cells();
                const auto cells = s.partition.cells();
                const auto idx = observed_indices(model, schedule, n);
                const auto expected = oracle::jeffrey_atoms(oracle::raw(prior), oracle::cells(model, idx),
                                                            oracle::cell_masses(model, idx));
                double gap = 0.0;
                for (std::size_t j = 0; j < cells.size(); ++j)
                    gap = std::max(gap, std::abs(prob(s.measure, cells[j]) - masses[j]));
                for (std::size_t i = 0; i < m; ++i)
                    gap = std::max(gap, std::abs(s.measure[i] - expected[i]));
                c.worst_agreement = std::max(c.worst_agreement, gap);
                if (gap > 1e-12)
                    ++c.bad_agreement;

                for (const auto& cell : cells) {
                    const bool zero = prob(s.measure, cell) == 0.0;
                    c.zero_cells += zero;
                    c.empty_cells += cell.empty();
                    if (zero != cell.empty())
                        ++c.bad_masses;
                }
            }
        }
        return c;
    }();
    return corpus;
}

Outcome posterior_validity() {
    const auto& c = posterior_corpus();
    const bool ok = c.bad_validity == 0 && c.bad_jeffrey == 0 && c.bad_agreement == 0;
    return {ok, fmt("%zu updates; invalid %zu, Jeffrey %zu, agreement %zu; max |sum-1| %.1e, max gap %.1e", c.updates,
                    c.bad_validity, c.bad_jeffrey, c.bad_agreement, c.worst_sum, c.worst_agreement)};
}

Outcome block_masses() {
    const auto& c = posterior_corpus();
    return {c.bad_masses == 0 && c.empty_cells > 0,
            fmt("%zu empty cells, %zu zero-mass cells, %zu mismatches", c.empty_cells, c.zero_cells, c.bad_masses)};
}

Outcome order_invariance() {
    Rng rng(1005);
    double worst = 0.0;
    std::size_t bad = 0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t m = gen::uniform_index(rng, 1, 10);
        const bool cover = m < 2 || gen::uniform_index(rng, 0, 1);
        const std::size_t k = gen::uniform_index(rng, 1, cover ? m : m - 1);
        const auto model = gen::random_model(rng, m, k, {cover, false});
        const auto prior = gen::random_measure(rng, m);
        std::vector<ProbMeasure> limits;
        for (int p = 0; p < 5; ++p)
            limits.push_back(dpk_run(prior, model, gen::random_schedule(rng, model), kExhaustive).final_state().measure);
        for (std::size_t i = 0; i < limits.size(); ++i)
            for (std::size_t j = i + 1; j < limits.size(); ++j) {
                double d = 0.0;
                for (std::size_t a = 0; a < m; ++a)
                    d = std::max(d, std::abs(limits[i][a] - limits[j][a]));
                worst = std::max(worst, d);
                bad += d > 1e-12;
            }
    }
    return {bad == 0, fmt("200 instances x 5 orders; max atom gap %.1e", worst)};
}

Outcome speed() {
    Rng rng(1006);
    std::size_t bad = 0;
    std::size_t bad_sim = 0;
    for (int t = 0; t < 50; ++t) {
        // Every step of the smaller range takes a full batch, so b divides |X1|.
        const std::size_t b = gen::uniform_index(rng, 1, 4);
        const std::size_t k1 = b * gen::uniform_index(rng, 1, 4);
        const std::size_t k2 = gen::uniform_index(rng, k1 + 1, k1 + 8);
        const auto m1 = gen::random_model(rng, k1 + gen::uniform_index(rng, 0, 3), k1);
        const auto m2 = gen::random_model(rng, k2 + gen::uniform_index(rng, 0, 3), k2);
        const std::size_t s1 = steps_to_terminal(m1, b);
        const std::size_t s2 = steps_to_terminal(m2, b);
        bad += !(s1 < s2);
        for (const auto* model : {&m1, &m2}) {
            Rng local(static_cast<std::uint64_t>(t));
            const auto schedule = gen::split_batches(local, gen::shuffled_symbols(local, *model), b);
            const auto trace = dpk_run(gen::random_measure(local, model->atom_count), *model, schedule);
            const std::size_t expect = model == &m1 ? s1 : s2;
            bad_sim += !(trace.stop_reason == StopReason::terminal && trace.states.size() - 1 == expect);
        }
    }
    // Outside the premise the last batch of the smaller range is short and ties are possible.
    std::size_t ties = 0;
    for (std::size_t b = 1; b <= 4; ++b)
        for (std::size_t k1 = 1; k1 <= 12; ++k1)
            for (std::size_t k2 = k1 + 1; k2 <= 13; ++k2)
                ties += (k1 + b - 1) / b == (k2 + b - 1) / b && k1 % b != 0;
    return {bad == 0 && bad_sim == 0, fmt("50 pairs, %zu violations, %zu simulation mismatches; %zu ties off-premise",
                                          bad, bad_sim, ties)};
}

Outcome tv_oracle() {
    Rng rng(1007);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t m = gen::uniform_index(rng, 1, 12);
        const auto p = gen::random_measure(rng, m, 0.2);
        const auto q = gen::random_measure(rng, m, 0.2);
        worst = std::max(worst, std::abs(tv_distance(p, q) - tv_distance_bruteforce(p, q)));
    }
    return {worst <= 1e-12, fmt("200 pairs; max gap %.1e", worst)};
}

Outcome bound_soundness() {
    Rng rng(1008);
    std::size_t events = 0, bad = 0, bad_gen = 0;
    for (int t = 0; t < 200; ++t) {
        const auto inst = gen::random_dipk_step(rng, 8, 5);
        const std::size_t m = inst.model.atom_count;
        const auto env = oracle::updated_envelope(inst.prev, cell_masks(inst.partition), inst.masses.cells());
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask, ++events) {
            const Event a = Event::from_mask(mask, m);
            const double lo = jeffrey_lower_bound(inst.prev, inst.partition, inst.masses, a);
            const double hi = jeffrey_upper_bound(inst.prev, inst.partition, inst.masses, a);
            bad += !(lo <= env.lower[mask] + 1e-12 && hi >= env.upper[mask] - 1e-12);
            for (const auto& g : inst.next) {
                const double v = prob(g, a);
                bad_gen += !(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }
    return {bad == 0 && bad_gen == 0,
            fmt("%zu (instance, event) pairs; %zu envelope and %zu generator violations", events, bad, bad_gen)};
}

Outcome chain_and_nesting() {
    Rng rng(1009);
    std::size_t chain = 0, chain_bad = 0, nest = 0, nest_bad = 0, flagged = 0, bracket_bad = 0;
    for (int t = 0; t < 200; ++t) {
        const auto inst = gen::random_dipk_step(rng, 7, 4);
        const std::size_t m = inst.model.atom_count;
        const EnvelopeTable table(inst.prev);
        for (std::uint64_t em = 1; em < (std::uint64_t{1} << m); ++em) {
            if (table.lower[em] <= 0.0)
                continue;
            const Event e = Event::from_mask(em, m);
            for (std::uint64_t am = 0; am < (std::uint64_t{1} << m); ++am, ++chain) {
                const Event a = Event::from_mask(am, m);
                const auto b = gen_bayes_bounds(inst.prev, a, e);
                const auto g = geometric_bounds(inst.prev, a, e);
                chain_bad += !(b.lower <= g.lower + 1e-12 && g.lower <= g.upper + 1e-12 && g.upper <= b.upper + 1e-12 &&
                               g.upper <= 1.0 + 1e-12);
            }
        }
        const auto env = oracle::updated_envelope(inst.prev, cell_masks(inst.partition), inst.masses.cells());
        for (std::uint64_t am = 0; am < (std::uint64_t{1} << m); ++am) {
            const Event a = Event::from_mask(am, m);
            GeometricJeffreyBounds g;
            try {
                g = geometric_jeffrey_bounds(inst.prev, inst.partition, inst.masses, a);
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::NullEnvelope)
                    continue;
                throw;
            }
            ++nest;
            const auto b = jeffrey_bounds(inst.prev, inst.partition, inst.masses, a);
            nest_bad += !(b.lower <= g.lower + 1e-12 && g.lower <= g.upper + 1e-12 && g.upper <= b.upper + 1e-12);
            if (g.assumption_held) {
                ++flagged;
                bracket_bad += !(g.lower <= env.lower[am] + 1e-9 && g.upper >= env.upper[am] - 1e-9);
            }
        }
    }
    return {chain_bad == 0 && nest_bad == 0 && bracket_bad == 0 && flagged > 0,
            fmt("chain %zu/%zu, nesting %zu/%zu, flagged bracket %zu/%zu ok", chain - chain_bad, chain, nest - nest_bad,
                nest, flagged - bracket_bad, flagged)};
}

Outcome behavior_soundness() {
    Rng rng(1010);
    std::size_t con = 0, loss = 0, dil_w = 0, con_w = 0, disagree = 0;
    for (int t = 0; t < 20000 && (con < 10 || loss < 10 || dil_w < 10 || con_w < 10); ++t) {
        const auto inst = gen::random_dipk_step(rng, 5, 4);
        const std::size_t m = inst.model.atom_count;
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
            const Event a = Event::from_mask(mask, m);
            const auto r = classify_behavior(inst.prev, inst.next, a);
            if (const auto c = sufficient_contraction(inst.prev, inst.partition, inst.masses, a)) {
                ++con;
                disagree += !r.contracts || (c.strict && !r.strictly_contracts);
            }
            if (sufficient_sure_loss(inst.prev, inst.partition, inst.masses, a)) {
                ++loss;
                disagree += !r.sure_loss;
            }
            for (std::size_t s = 0; s < inst.prev.size(); ++s)
                for (std::size_t k = 0; k < inst.prev.size(); ++k) {
                    if (const auto w = dilation_witness(inst.prev, inst.next, a, s, k)) {
                        ++dil_w;
                        disagree += !r.dilates || (w.strict && !r.strictly_dilates);
                    }
                    if (const auto w = contraction_witness(inst.prev, inst.next, a, s, k)) {
                        ++con_w;
                        disagree += !r.contracts || (w.strict && !r.strictly_contracts);
                    }
                }
        }
    }
    const bool enough = con >= 10 && loss >= 10 && dil_w >= 10 && con_w >= 10;
    return {enough && disagree == 0, fmt("contraction %zu, sure loss %zu, dilation witness %zu, contraction witness "
                                         "%zu; %zu disagreements",
                                         con, loss, dil_w, con_w, disagree)};
}

Outcome hausdorff_convergence() {
    Rng rng(1011);
    std::size_t runs = 0, nonzero = 0, increases = 0;
    for (int t = 0; t < 300; ++t, ++runs) {
        const std::size_t m = gen::uniform_index(rng, 1, 8);
        const auto model = gen::random_model(rng, m, gen::uniform_index(rng, 1, m));
        const auto set = gen::random_credal(rng, m, gen::uniform_index(rng, 1, 5));
        const auto trace = dipk_run(set, model, gen::random_schedule(rng, model));
        nonzero += trace.stop_reason != StopReason::terminal || trace.hausdorff_to_final.back() != 0.0;
        // Block masses are fixed when a block appears, so the pinned suffix is the whole run.
        for (std::size_t i = 1; i < trace.hausdorff_to_final.size(); ++i)
            increases += trace.hausdorff_to_final[i] > trace.hausdorff_to_final[i - 1] + 1e-12;
    }
    return {nonzero == 0 && increases == 0,
            fmt("%zu runs to terminal; %zu nonzero finals, %zu increases", runs, nonzero, increases)};
}

Outcome survey_pipeline() {
    const auto inst = demos::survey();
    const auto& model = inst.config.model;
    std::vector<SurveyStage> stages;
    for (std::size_t i = 0; i < inst.config.options.coarsening.size(); ++i)
        stages.push_back({i < inst.stream.size() ? inst.stream[i] : std::vector<std::string>{},
                          inst.config.options.coarsening[i]});
    const auto coarse = coarse_dpk_run(*inst.config.prior, model, stages);
    const auto fine = dpk_run(*inst.config.prior, model, inst.stream, kExhaustive);
    double gap = 0.0;
    for (std::size_t n = 1; n < coarse.size(); ++n) {
        const auto& f = fine.states[std::min(n, fine.states.size() - 1)].measure;
        for (const auto& cell : coarse[n].coarse.cells())
            gap = std::max(gap, std::abs(prob(coarse[n].measure, cell) - prob(f, cell)));
    }
    double final_gap = 0.0;
    for (std::size_t a = 0; a < model.atom_count; ++a)
        final_gap = std::max(final_gap, std::abs(coarse.back().measure[a] - fine.final_state().measure[a]));

    Rng rng(1012);
    for (int t = 0; t < 200; ++t) {
        const std::size_t m = gen::uniform_index(rng, 2, 12);
        const auto rmodel = gen::random_model(rng, m, gen::uniform_index(rng, 1, m));
        const auto prior = gen::random_measure(rng, m);
        const auto schedule = gen::random_schedule(rng, rmodel);
        std::vector<SurveyStage> rstages;
        for (const auto& batch : schedule)
            rstages.push_back({batch, gen::split_batches(rng, gen::shuffled_symbols(rng, rmodel))});
        const auto rc = coarse_dpk_run(prior, rmodel, rstages);
        const auto rf = dpk_run(prior, rmodel, schedule, kExhaustive);
        for (std::size_t n = 1; n < rc.size(); ++n)
            for (const auto& cell : rc[n].coarse.cells())
                gap = std::max(gap, std::abs(prob(rc[n].measure, cell) - prob(rf.states[n].measure, cell)));
    }
    return {gap <= 1e-12 && final_gap <= 1e-12,
            fmt("survey + 200 random runs; max coarse-block gap %.1e, final stage vs fine limit %.1e", gap, final_gap)};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome cli_determinism() {
    const std::string cli = DPK_CLI_PATH;
    const std::string samples = DPK_SAMPLES_DIR;
    const auto dir = std::filesystem::temp_directory_path() / "dpk_acceptance";
    std::filesystem::create_directories(dir);
    const std::vector<std::string> invocations{
        "demo binomial-example --seed 13",
        "demo noncommutativity --seed 13",
        "demo survey --seed 13",
        "run-dpk --config " + samples + "/noncommutative.json --stream " + samples + "/noncommutative.stream --seed 13",
        "run-dpk --config " + samples + "/survey.json --stream " + samples + "/survey.stream",
        "run-dipk --config " + samples + "/credal3.json --stream " + samples + "/credal3.stream --seed 13 --sweep-events",
    };
    std::size_t identical = 0;
    std::string detail;
    for (std::size_t i = 0; i < invocations.size(); ++i) {
        std::string out[2];
        for (int r = 0; r < 2; ++r) {
            const auto json = dir / ("run" + std::to_string(r) + ".json");
            const auto csv = dir / ("run" + std::to_string(r) + ".csv");
            const std::string cmd =
                cli + " " + invocations[i] + " --out " + json.string() + " --csv " + csv.string() + " 2>/dev/null";
            const int status = std::system(cmd.c_str());
            if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
                detail += " [exit " + std::to_string(WEXITSTATUS(status)) + ": " + invocations[i] + "]";
            out[r] = slurp(json) + "\n--\n" + slurp(csv);
        }
        identical += out[0] == out[1] && out[0].size() > 4;
    }
    std::filesystem::remove_all(dir);
    return {identical == invocations.size() && detail.empty(),
            fmt("%zu/%zu invocations byte-identical", identical, invocations.size()) + detail};
}

} // namespace

int main() {
    criterion(1, "binomial example masses", 1.0, binomial);
    criterion(2, "noncommutativity instance", 1.0, noncommutative);
    criterion(3, "posterior validity", 10.0, posterior_validity);
    criterion(4, "mechanical block masses", 0.0, block_masses);
    criterion(5, "order invariance", 0.0, order_invariance);
    criterion(6, "refinement speed", 0.0, speed);
    criterion(7, "tv oracle", 0.0, tv_oracle);
    criterion(8, "bound soundness", 60.0, bound_soundness);
    criterion(9, "chain inequality and nesting", 0.0, chain_and_nesting);
    criterion(10, "behavior soundness", 0.0, behavior_soundness);
    criterion(11, "hausdorff convergence", 0.0, hausdorff_convergence);
    criterion(12, "survey pipeline", 0.0, survey_pipeline);
    criterion(13, "cli determinism", 0.0, cli_determinism);
    std::printf("%d of 13 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
