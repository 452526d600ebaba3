// dpk: replay observation streams through the DPK / DIPK engines.
//
//   dpk run-dpk  --config cfg.json [--stream obs.txt] [--out report.json] [--csv table.csv]
//   dpk run-dipk --config cfg.json [--stream obs.txt] [--sweep-events] [--seed 7]
//   dpk demo binomial-example | noncommutativity | survey
//
// Exit codes: 0 success, 1 invalid config/stream/arguments, 2 engine error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "dpk/demos.hpp"
#include "dpk/io.hpp"
#include "dpk/session.hpp"

namespace {

constexpr int kValidationFailure = 1;
constexpr int kEngineFailure = 2;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw dpk::io::ConfigError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw dpk::io::ConfigError("cannot write '" + path + "'");
    out << text;
}

struct Common {
    std::string out;
    std::string csv;
    std::optional<double> tolerance;
    bool sweep = false;
    std::optional<std::uint64_t> seed;

    dpk::io::RunFlags flags() const { return {tolerance, sweep, seed}; }
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--out", c.out, "Report JSON path (default: stdout)");
    cmd->add_option("--csv", c.csv, "Per-step CSV table path");
    cmd->add_option("--tolerance", c.tolerance, "TV stop tolerance for runs that cannot terminate")
        ->check(CLI::NonNegativeNumber);
    cmd->add_flag("--sweep-events", c.sweep, "Classify behavior on all events (at most 12 atoms)");
    cmd->add_option("--seed", c.seed, "Seed for the randomized self-check");
}

void emit(const dpk::io::Report& report, const Common& c) {
    write_output(c.out, report.doc.dump(2) + "\n");
    if (!c.csv.empty())
        write_output(c.csv, report.csv);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic (imprecise) probability kinematics"};
    app.require_subcommand(1);

    Common common;
    std::string config_path;
    std::string stream_path;

    auto* run_dpk = app.add_subcommand("run-dpk", "Replay a stream through the precise engine");
    auto* run_dipk = app.add_subcommand("run-dipk", "Replay a stream through the credal engine");
    for (auto* cmd : {run_dpk, run_dipk}) {
        cmd->add_option("--config", config_path, "Session config (JSON)")->required();
        cmd->add_option("--stream", stream_path, "Observation stream, one batch per line");
        add_common(cmd, common);
    }

    std::string demo_name;
    auto* demo = app.add_subcommand("demo", "Run a built-in instance");
    demo->add_option("name", demo_name, "binomial-example | noncommutativity | survey")
        ->required()
        ->check(CLI::IsMember({"binomial-example", "noncommutativity", "survey"}));
    add_common(demo, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kValidationFailure;
    }

    try {
        if (demo->parsed()) {
            emit(dpk::demos::run_demo(demo_name, common.flags()), common);
            return 0;
        }
        const auto cfg = dpk::io::parse_config_text(read_file(config_path));
        const auto stream =
            stream_path.empty() ? std::vector<std::vector<std::string>>{}
                                : dpk::io::parse_stream(read_file(stream_path), cfg.model);
        if (run_dpk->parsed())
            emit(dpk::io::run_dpk_report(cfg, stream, common.flags()), common);
        else
            emit(dpk::io::run_dipk_report(cfg, stream, common.flags()), common);
        return 0;
    } catch (const dpk::io::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidationFailure;
    } catch (const dpk::Error& e) {
        std::cerr << "engine error [" << dpk::to_string(e.kind()) << "]: " << e.what() << "\n";
        return kEngineFailure;
    }
}
