#pragma once

// Experiment configuration: parsing, validation and serialization.
//
//     n = 20
//     seed = 7
//     horizon = 2000
//
//     [graph]
//     kind = er              # er | path | star | complete
//     p = 0.1                # er only
//     max_resamples = 10000  # er only
//
//     [weights]
//     kind = metropolis      # metropolis | lazy-metropolis | random-row-stochastic
//
//     [x0]
//     kind = uniform         # uniform (lo, hi) | explicit (values)
//     lo = 0
//     hi = 5
//
//     [schedule.<name>]      # one or more
//     kind = exponential     # constant (lambda) | exponential (rate) | hyperbolic
//                            # | zero | custom (values) | adversarial (tstar, target)
//     rate = 0.5
//
//     [tolerances]
//     conv = 1e-8
//     underflow = 1e-14
//     tail_eps = 1e-14
//
//     [output]
//     dir = out
//     avg_of_logs = false
//
//     [verify]
//     horizon = 500
//     trials = 100
//
// Every section except [graph], [x0] and at least one schedule is optional.
// `target` is a 1-based agent index or `argmax`.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fjdc/errors.hpp"
#include "fjdc/kv.hpp"
#include "fjdc/schedules.hpp"

namespace fjdc {

enum class GraphKind { ErdosRenyi, Path, Star, Complete };
enum class WeightsKind { Metropolis, LazyMetropolis, RandomRowStochastic };
enum class InitialKind { Uniform, Explicit };
enum class ScheduleSpecKind { Constant, Exponential, Hyperbolic, Zero, Custom, Adversarial };

inline const char* to_string(GraphKind k) {
    switch (k) {
        case GraphKind::ErdosRenyi: return "er";
        case GraphKind::Path: return "path";
        case GraphKind::Star: return "star";
        case GraphKind::Complete: return "complete";
    }
    return "?";
}

inline const char* to_string(WeightsKind k) {
    switch (k) {
        case WeightsKind::Metropolis: return "metropolis";
        case WeightsKind::LazyMetropolis: return "lazy-metropolis";
        case WeightsKind::RandomRowStochastic: return "random-row-stochastic";
    }
    return "?";
}

inline const char* to_string(ScheduleSpecKind k) {
    switch (k) {
        case ScheduleSpecKind::Constant: return "constant";
        case ScheduleSpecKind::Exponential: return "exponential";
        case ScheduleSpecKind::Hyperbolic: return "hyperbolic";
        case ScheduleSpecKind::Zero: return "zero";
        case ScheduleSpecKind::Custom: return "custom";
        case ScheduleSpecKind::Adversarial: return "adversarial";
    }
    return "?";
}

struct GraphSpec {
    GraphKind kind = GraphKind::ErdosRenyi;
    double p = 0.1;
    std::uint64_t max_resamples = 10000;
    bool operator==(const GraphSpec&) const = default;
};

struct InitialSpec {
    InitialKind kind = InitialKind::Uniform;
    double lo = 0.0;
    double hi = 5.0;
    std::vector<double> values;
    bool operator==(const InitialSpec&) const = default;
};

struct ScheduleSpec {
    std::string name;
    ScheduleSpecKind kind = ScheduleSpecKind::Zero;
    double lambda = 0.0;
    double rate = 0.0;
    std::vector<double> values;
    std::uint64_t tstar = 0;
    std::optional<std::uint64_t> target;  // 1-based; empty = argmax of x0
    bool operator==(const ScheduleSpec&) const = default;

    bool uniform() const noexcept { return kind != ScheduleSpecKind::Adversarial; }

    CompetitionSchedule to_schedule() const {
        switch (kind) {
            case ScheduleSpecKind::Constant: return CompetitionSchedule::constant(lambda);
            case ScheduleSpecKind::Exponential: return CompetitionSchedule::exponential(rate);
            case ScheduleSpecKind::Hyperbolic: return CompetitionSchedule::hyperbolic();
            case ScheduleSpecKind::Zero: return CompetitionSchedule::zero_consensus();
            case ScheduleSpecKind::Custom: return CompetitionSchedule::custom(values);
            case ScheduleSpecKind::Adversarial: break;
        }
        throw NonUniformUnsupported("schedule '" + name + "' is per-agent");
    }
};

struct Tolerances {
    double conv = 1e-8;
    TruncationPolicy trunc{};
    bool operator==(const Tolerances&) const = default;
};

struct VerifySpec {
    std::uint64_t horizon = 500;
    std::uint64_t trials = 100;
    bool operator==(const VerifySpec&) const = default;
};

struct ExperimentConfig {
    std::uint64_t n = 20;
    std::uint64_t seed = 1;
    std::uint64_t horizon = 1000;
    GraphSpec graph;
    WeightsKind weights = WeightsKind::Metropolis;
    InitialSpec x0;
    std::vector<ScheduleSpec> schedules;
    Tolerances tol;
    std::string output_dir;  // empty: caller decides
    bool avg_of_logs = false;
    VerifySpec verify;
    bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

// Walks one section, handing out typed fields and rejecting leftovers.
class SectionReader {
public:
    SectionReader(const KvSection& sec) : sec_(sec) {}

    const KvEntry* raw(const std::string& key) {
        used_.insert(key);
        return sec_.find(key);
    }

    std::optional<std::string> text(const std::string& key) {
        const auto* e = raw(key);
        if (!e) return std::nullopt;
        return e->value;
    }

    std::optional<double> number(const std::string& key, double lo, double hi) {
        const auto* e = raw(key);
        if (!e) return std::nullopt;
        const auto v = parse_double(e->value);
        if (!v || !std::isfinite(*v)) throw ConfigError(e->line, field(key), "expected a finite number, got '" + e->value + "'");
        if (!(*v >= lo && *v <= hi))
            throw ConfigError(e->line, field(key), "value " + e->value + " outside [" + format_double(lo) + ", " + format_double(hi) + "]");
        return v;
    }

    std::optional<std::uint64_t> integer(const std::string& key, std::uint64_t lo, std::uint64_t hi) {
        const auto* e = raw(key);
        if (!e) return std::nullopt;
        const auto v = parse_u64(e->value);
        if (!v) throw ConfigError(e->line, field(key), "expected a non-negative integer, got '" + e->value + "'");
        if (*v < lo || *v > hi)
            throw ConfigError(e->line, field(key), "value " + e->value + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return v;
    }

    std::optional<bool> boolean(const std::string& key) {
        const auto* e = raw(key);
        if (!e) return std::nullopt;
        if (e->value == "true") return true;
        if (e->value == "false") return false;
        throw ConfigError(e->line, field(key), "expected true or false");
    }

    std::optional<std::vector<double>> numbers(const std::string& key) {
        const auto* e = raw(key);
        if (!e) return std::nullopt;
        std::vector<double> out;
        for (auto item : split_list(e->value)) {
            const auto v = parse_double(item);
            if (!v || !std::isfinite(*v)) throw ConfigError(e->line, field(key), "bad list element '" + std::string(item) + "'");
            out.push_back(*v);
        }
        return out;
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) {
        const auto* e = sec_.find(key);
        throw ConfigError(e ? e->line : sec_.line, field(key), what);
    }

    void finish() {
        for (const auto& e : sec_.entries)
            if (!used_.count(e.key)) throw ConfigError(e.line, field(e.key), "unknown key");
    }

    std::string field(const std::string& key) const { return sec_.name.empty() ? key : sec_.name + "." + key; }

private:
    const KvSection& sec_;
    std::set<std::string> used_;
};

template <class Enum, std::size_t N>
Enum pick(SectionReader& r, const std::string& key, const std::string& value, const std::pair<const char*, Enum> (&table)[N]) {
    for (const auto& [name, e] : table)
        if (value == name) return e;
    std::string options;
    for (const auto& [name, e] : table) options += std::string(options.empty() ? "" : "|") + name;
    r.fail(key, "unknown value '" + value + "' (expected " + options + ")");
}

}  // namespace detail

inline ExperimentConfig parse_config(std::string_view text) {
    const KvDocument doc = parse_kv(text);
    ExperimentConfig cfg;
    using detail::SectionReader;

    std::set<std::string> known{"", "graph", "weights", "x0", "tolerances", "output", "verify"};
    for (const auto& sec : doc.sections) {
        const bool is_schedule = sec.name.rfind("schedule.", 0) == 0 && sec.name.size() > 9;
        if (!is_schedule && !known.count(sec.name)) throw ConfigError(sec.line, sec.name, "unknown section");
    }

    {
        SectionReader r(doc.sections.front());
        cfg.n = r.integer("n", 2, 100000).value_or(cfg.n);
        cfg.seed = r.integer("seed", 0, std::numeric_limits<std::uint64_t>::max()).value_or(cfg.seed);
        cfg.horizon = r.integer("horizon", 1, 100'000'000).value_or(cfg.horizon);
        r.finish();
    }

    const auto* graph = doc.find("graph");
    if (!graph) throw ConfigError(0, "graph", "missing [graph] section");
    {
        SectionReader r(*graph);
        static constexpr std::pair<const char*, GraphKind> kinds[] = {
            {"er", GraphKind::ErdosRenyi}, {"path", GraphKind::Path}, {"star", GraphKind::Star}, {"complete", GraphKind::Complete}};
        const auto kind = r.text("kind");
        if (!kind) r.fail("kind", "missing graph kind");
        cfg.graph.kind = detail::pick(r, "kind", *kind, kinds);
        if (cfg.graph.kind == GraphKind::ErdosRenyi) {
            cfg.graph.p = r.number("p", 0.0, 1.0).value_or(cfg.graph.p);
            cfg.graph.max_resamples = r.integer("max_resamples", 1, 100'000'000).value_or(cfg.graph.max_resamples);
        }
        r.finish();
    }

    if (const auto* w = doc.find("weights")) {
        SectionReader r(*w);
        static constexpr std::pair<const char*, WeightsKind> kinds[] = {{"metropolis", WeightsKind::Metropolis},
                                                                        {"lazy-metropolis", WeightsKind::LazyMetropolis},
                                                                        {"random-row-stochastic", WeightsKind::RandomRowStochastic}};
        if (auto kind = r.text("kind")) cfg.weights = detail::pick(r, "kind", *kind, kinds);
        r.finish();
    }

    const auto* x0 = doc.find("x0");
    if (!x0) throw ConfigError(0, "x0", "missing [x0] section");
    {
        SectionReader r(*x0);
        static constexpr std::pair<const char*, InitialKind> kinds[] = {{"uniform", InitialKind::Uniform}, {"explicit", InitialKind::Explicit}};
        const auto kind = r.text("kind");
        if (!kind) r.fail("kind", "missing x0 kind");
        cfg.x0.kind = detail::pick(r, "kind", *kind, kinds);
        if (cfg.x0.kind == InitialKind::Uniform) {
            cfg.x0.lo = r.number("lo", -1e300, 1e300).value_or(cfg.x0.lo);
            cfg.x0.hi = r.number("hi", -1e300, 1e300).value_or(cfg.x0.hi);
            if (cfg.x0.lo > cfg.x0.hi) r.fail("hi", "x0.hi must be >= x0.lo");
        } else {
            auto values = r.numbers("values");
            if (!values) r.fail("values", "explicit x0 needs values");
            if (values->size() != cfg.n) r.fail("values", "expected " + std::to_string(cfg.n) + " values, got " + std::to_string(values->size()));
            cfg.x0.values = std::move(*values);
        }
        r.finish();
    }

    for (const auto& sec : doc.sections) {
        if (sec.name.rfind("schedule.", 0) != 0) continue;
        SectionReader r(sec);
        ScheduleSpec s;
        s.name = sec.name.substr(9);
        static constexpr std::pair<const char*, ScheduleSpecKind> kinds[] = {
            {"constant", ScheduleSpecKind::Constant}, {"exponential", ScheduleSpecKind::Exponential},
            {"hyperbolic", ScheduleSpecKind::Hyperbolic}, {"zero", ScheduleSpecKind::Zero},
            {"custom", ScheduleSpecKind::Custom}, {"adversarial", ScheduleSpecKind::Adversarial}};
        const auto kind = r.text("kind");
        if (!kind) r.fail("kind", "missing schedule kind");
        s.kind = detail::pick(r, "kind", *kind, kinds);
        switch (s.kind) {
            case ScheduleSpecKind::Constant: {
                const auto l = r.number("lambda", 0.0, 1.0);
                if (!l) r.fail("lambda", "constant schedule needs lambda");
                s.lambda = *l;
                break;
            }
            case ScheduleSpecKind::Exponential: {
                const auto a = r.number("rate", 0.0, 1e300);
                if (!a || !(*a > 0.0)) r.fail("rate", "exponential schedule needs rate > 0");
                s.rate = *a;
                break;
            }
            case ScheduleSpecKind::Custom: {
                auto v = r.numbers("values");
                if (!v) r.fail("values", "custom schedule needs values");
                for (double x : *v)
                    if (!(x >= 0.0 && x <= 1.0)) r.fail("values", "custom lambda outside [0,1]");
                s.values = std::move(*v);
                break;
            }
            case ScheduleSpecKind::Adversarial: {
                s.tstar = r.integer("tstar", 0, 100'000'000).value_or(0);
                const auto* t = r.raw("target");
                if (t && t->value != "argmax") {
                    const auto idx = parse_u64(t->value);
                    if (!idx || *idx < 1 || *idx > cfg.n)
                        throw ConfigError(t->line, r.field("target"), "target must be argmax or an agent index in 1.." + std::to_string(cfg.n));
                    s.target = *idx;
                }
                break;
            }
            default: break;
        }
        r.finish();
        cfg.schedules.push_back(std::move(s));
    }
    if (cfg.schedules.empty()) throw ConfigError(0, "schedule", "at least one [schedule.<name>] section is required");

    if (const auto* t = doc.find("tolerances")) {
        SectionReader r(*t);
        cfg.tol.conv = r.number("conv", 1e-300, 1.0).value_or(cfg.tol.conv);
        cfg.tol.trunc.underflow = r.number("underflow", 1e-300, 1.0).value_or(cfg.tol.trunc.underflow);
        cfg.tol.trunc.tail_eps = r.number("tail_eps", 1e-300, 1.0).value_or(cfg.tol.trunc.tail_eps);
        r.finish();
    }
    if (const auto* o = doc.find("output")) {
        SectionReader r(*o);
        cfg.output_dir = r.text("dir").value_or("");
        cfg.avg_of_logs = r.boolean("avg_of_logs").value_or(false);
        r.finish();
    }
    if (const auto* v = doc.find("verify")) {
        SectionReader r(*v);
        cfg.verify.horizon = r.integer("horizon", 1, 10'000'000).value_or(cfg.verify.horizon);
        cfg.verify.trials = r.integer("trials", 0, 1'000'000).value_or(cfg.verify.trials);
        r.finish();
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(0, "", "cannot read config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

inline KvDocument to_kv(const ExperimentConfig& cfg) {
    KvDocument doc;
    auto& top = doc.top();
    top.set("n", std::to_string(cfg.n));
    top.set("seed", std::to_string(cfg.seed));
    top.set("horizon", std::to_string(cfg.horizon));

    auto& g = doc.add("graph");
    g.set("kind", to_string(cfg.graph.kind));
    if (cfg.graph.kind == GraphKind::ErdosRenyi) {
        g.set("p", format_double(cfg.graph.p));
        g.set("max_resamples", std::to_string(cfg.graph.max_resamples));
    }
    doc.add("weights").set("kind", to_string(cfg.weights));

    auto& x = doc.add("x0");
    if (cfg.x0.kind == InitialKind::Uniform) {
        x.set("kind", "uniform");
        x.set("lo", format_double(cfg.x0.lo));
        x.set("hi", format_double(cfg.x0.hi));
    } else {
        x.set("kind", "explicit");
        x.set("values", format_list(cfg.x0.values));
    }

    for (const auto& s : cfg.schedules) {
        auto& sec = doc.add("schedule." + s.name);
        sec.set("kind", to_string(s.kind));
        switch (s.kind) {
            case ScheduleSpecKind::Constant: sec.set("lambda", format_double(s.lambda)); break;
            case ScheduleSpecKind::Exponential: sec.set("rate", format_double(s.rate)); break;
            case ScheduleSpecKind::Custom: sec.set("values", format_list(s.values)); break;
            case ScheduleSpecKind::Adversarial:
                sec.set("tstar", std::to_string(s.tstar));
                sec.set("target", s.target ? std::to_string(*s.target) : "argmax");
                break;
            default: break;
        }
    }

    auto& t = doc.add("tolerances");
    t.set("conv", format_double(cfg.tol.conv));
    t.set("underflow", format_double(cfg.tol.trunc.underflow));
    t.set("tail_eps", format_double(cfg.tol.trunc.tail_eps));

    auto& o = doc.add("output");
    if (!cfg.output_dir.empty()) o.set("dir", cfg.output_dir);
    o.set("avg_of_logs", cfg.avg_of_logs ? "true" : "false");

    auto& v = doc.add("verify");
    v.set("horizon", std::to_string(cfg.verify.horizon));
    v.set("trials", std::to_string(cfg.verify.trials));
    return doc;
}

inline std::string serialize_config(const ExperimentConfig& cfg) { return to_kv_text(to_kv(cfg)); }

}  // namespace fjdc
