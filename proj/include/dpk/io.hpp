#pragma once

// Session configuration and observation streams.
//
// Config (JSON):
//   {
//     "atoms": ["w0", "w1", ...],
//     "model": {"symbols": [...], "pmf": [...], "preimages": [["w0"], ...],
//               "tail_symbol": "rest"},                      // tail optional
//     "prior": [...],                                        // run-dpk
//     "generators": [[...], ...],                            // run-dipk
//     "options": {"tolerance": 1e-10, "budget": 40,
//                 "queries": [{"name": "A", "atoms": ["w2"]}],
//                 "coarsening": [[["s1", "s2"], ["s3"]], ...], // one entry per stream line
//                 "sweep_events": false}
//   }
//
// Stream: one batch per line, symbols separated by whitespace or commas.
// Blank lines and text after '#' are ignored.

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "dpk/measure.hpp"
#include "dpk/observation.hpp"

namespace dpk::io {

using json = nlohmann::json;

/// A malformed config or stream. `line` is 1-based for stream errors, 0 otherwise.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct NamedEvent {
    std::string name;
    Event event;
    bool operator==(const NamedEvent&) const = default;
};

struct Options {
    double tolerance = 1e-10;
    std::optional<std::size_t> budget;
    std::vector<NamedEvent> queries;
    std::vector<std::vector<std::vector<std::string>>> coarsening;
    bool sweep_events = false;
    bool operator==(const Options&) const = default;
};

struct SessionConfig {
    StateSpace space = StateSpace::indexed(1);
    ObservationModel model;
    std::optional<ProbMeasure> prior;
    std::vector<ProbMeasure> generators;
    Options options;
    bool operator==(const SessionConfig&) const = default;
};

/// Rounds to 12 significant digits so that printed reports are stable.
inline double round12(double x) {
    if (!std::isfinite(x) || x == 0.0)
        return x == 0.0 ? 0.0 : x;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return std::strtod(buf, nullptr);
}

inline std::string format12(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x == 0.0 ? 0.0 : x);
    return buf;
}

namespace detail {

inline Event event_from_labels(const StateSpace& space, const json& labels, const std::string& where) {
    if (!labels.is_array())
        throw ConfigError(where + ": expected a list of atom labels");
    std::vector<std::size_t> atoms;
    for (const auto& l : labels) {
        if (!l.is_string())
            throw ConfigError(where + ": atom labels must be strings");
        const std::size_t i = space.find(l.get<std::string>());
        if (i == space.size())
            throw ConfigError(where + ": unknown atom '" + l.get<std::string>() + "'");
        atoms.push_back(i);
    }
    return Event(std::move(atoms));
}

inline json labels_of(const StateSpace& space, const Event& e) {
    json out = json::array();
    for (auto a : e)
        out.push_back(space.label(a));
    return out;
}

inline ProbMeasure measure_from(const json& j, std::size_t m, const std::string& where) {
    if (!j.is_array() || j.size() != m)
        throw ConfigError(where + ": expected " + std::to_string(m) + " masses");
    std::vector<double> v;
    for (const auto& x : j) {
        if (!x.is_number())
            throw ConfigError(where + ": masses must be numbers");
        v.push_back(x.get<double>());
    }
    try {
        return ProbMeasure(std::move(v));
    } catch (const Error& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
    auto it = obj.find(key);
    return it == obj.end() ? fallback : it->template get<T>();
}

} // namespace detail

inline SessionConfig parse_config(const json& doc) {
    try {
        if (!doc.is_object())
            throw ConfigError("config must be a JSON object");
        SessionConfig cfg;
        if (!doc.contains("atoms") || !doc["atoms"].is_array())
            throw ConfigError("config needs an 'atoms' list");
        try {
            cfg.space = StateSpace(doc["atoms"].get<std::vector<std::string>>());
        } catch (const Error& e) {
            throw ConfigError(std::string("atoms: ") + e.what());
        }
        const std::size_t m = cfg.space.size();

        if (!doc.contains("model") || !doc["model"].is_object())
            throw ConfigError("config needs a 'model' object");
        const json& mj = doc["model"];
        cfg.model.atom_count = m;
        cfg.model.symbols = mj.at("symbols").get<std::vector<std::string>>();
        cfg.model.pmf = mj.at("pmf").get<std::vector<double>>();
        const json& pre = mj.at("preimages");
        if (!pre.is_array())
            throw ConfigError("model.preimages must be a list");
        for (std::size_t j = 0; j < pre.size(); ++j)
            cfg.model.preimages.push_back(
                detail::event_from_labels(cfg.space, pre[j], "model.preimages[" + std::to_string(j) + "]"));
        if (mj.contains("tail_symbol") && !mj["tail_symbol"].is_null()) {
            const auto idx = cfg.model.index_of(mj["tail_symbol"].get<std::string>());
            if (!idx)
                throw ConfigError("model.tail_symbol is not one of the symbols");
            cfg.model.tail_symbol = *idx;
        }
        if (const auto problems = validate_model(cfg.model); !problems.empty()) {
            std::string msg = "model: " + problems.front();
            for (std::size_t i = 1; i < problems.size(); ++i)
                msg += "; " + problems[i];
            throw ConfigError(msg);
        }

        if (doc.contains("prior"))
            cfg.prior = detail::measure_from(doc["prior"], m, "prior");
        if (doc.contains("generators")) {
            const json& g = doc["generators"];
            if (!g.is_array() || g.empty())
                throw ConfigError("generators must be a nonempty list");
            for (std::size_t i = 0; i < g.size(); ++i)
                cfg.generators.push_back(detail::measure_from(g[i], m, "generators[" + std::to_string(i) + "]"));
        }

        if (doc.contains("options")) {
            const json& o = doc["options"];
            if (!o.is_object())
                throw ConfigError("options must be an object");
            cfg.options.tolerance = detail::get_or(o, "tolerance", cfg.options.tolerance);
            if (!(cfg.options.tolerance >= 0.0))
                throw ConfigError("options.tolerance must be nonnegative");
            if (o.contains("budget") && !o["budget"].is_null())
                cfg.options.budget = o["budget"].get<std::size_t>();
            cfg.options.sweep_events = detail::get_or(o, "sweep_events", false);
            if (o.contains("queries")) {
                for (const auto& q : o["queries"]) {
                    NamedEvent ne;
                    ne.name = q.at("name").get<std::string>();
                    ne.event = detail::event_from_labels(cfg.space, q.at("atoms"), "query '" + ne.name + "'");
                    for (const auto& prev : cfg.options.queries)
                        if (prev.name == ne.name)
                            throw ConfigError("duplicate query name '" + ne.name + "'");
                    cfg.options.queries.push_back(std::move(ne));
                }
            }
            if (o.contains("coarsening")) {
                cfg.options.coarsening =
                    o["coarsening"].get<std::vector<std::vector<std::vector<std::string>>>>();
                for (const auto& stage : cfg.options.coarsening)
                    for (const auto& group : stage)
                        for (const auto& s : group)
                            if (!cfg.model.index_of(s))
                                throw ConfigError("coarsening refers to unknown symbol '" + s + "'");
            }
        }
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
}

inline SessionConfig parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(doc);
}

inline json serialize_config(const SessionConfig& cfg) {
    json doc;
    doc["atoms"] = cfg.space.labels();
    json model;
    model["symbols"] = cfg.model.symbols;
    model["pmf"] = cfg.model.pmf;
    json pre = json::array();
    for (const auto& e : cfg.model.preimages)
        pre.push_back(detail::labels_of(cfg.space, e));
    model["preimages"] = pre;
    if (cfg.model.tail_symbol)
        model["tail_symbol"] = cfg.model.symbols[*cfg.model.tail_symbol];
    doc["model"] = model;
    auto masses = [](const ProbMeasure& p) { return std::vector<double>(p.masses().begin(), p.masses().end()); };
    if (cfg.prior)
        doc["prior"] = masses(*cfg.prior);
    if (!cfg.generators.empty()) {
        json g = json::array();
        for (const auto& p : cfg.generators)
            g.push_back(masses(p));
        doc["generators"] = g;
    }
    json o;
    o["tolerance"] = cfg.options.tolerance;
    if (cfg.options.budget)
        o["budget"] = *cfg.options.budget;
    o["sweep_events"] = cfg.options.sweep_events;
    json q = json::array();
    for (const auto& ne : cfg.options.queries)
        q.push_back({{"name", ne.name}, {"atoms", detail::labels_of(cfg.space, ne.event)}});
    o["queries"] = q;
    if (!cfg.options.coarsening.empty())
        o["coarsening"] = cfg.options.coarsening;
    doc["options"] = o;
    return doc;
}

/// Splits stream text into batches and checks every symbol against `model`:
/// known, observable, and not seen on an earlier line.
inline std::vector<std::vector<std::string>> parse_stream(const std::string& text, const ObservationModel& model) {
    std::vector<std::vector<std::string>> batches;
    std::unordered_map<std::string, std::size_t> first_line;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        for (char& c : line)
            if (c == ',')
                c = ' ';
        std::istringstream tokens(line);
        std::vector<std::string> batch;
        std::string tok;
        while (tokens >> tok) {
            const auto idx = model.index_of(tok);
            if (!idx)
                throw ConfigError("unknown symbol '" + tok + "'", lineno);
            if (model.tail_symbol && *model.tail_symbol == *idx)
                throw ConfigError("tail symbol '" + tok + "' cannot be observed", lineno);
            auto [it, fresh] = first_line.emplace(tok, lineno);
            if (!fresh && it->second != lineno)
                throw ConfigError("symbol '" + tok + "' already observed on line " + std::to_string(it->second),
                                  lineno);
            batch.push_back(tok);
        }
        if (!batch.empty())
            batches.push_back(std::move(batch));
    }
    return batches;
}

} // namespace dpk::io
