#pragma once

// Config-driven experiment runner: builds the network and initial condition
// from an ExperimentConfig, simulates every schedule, and writes one CSV per
// schedule plus a manifest describing the run.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "fjdc/bounds.hpp"
#include "fjdc/config.hpp"
#include "fjdc/dynamics.hpp"
#include "fjdc/errors.hpp"
#include "fjdc/graph.hpp"
#include "fjdc/kv.hpp"
#include "fjdc/nonuniform.hpp"
#include "fjdc/random.hpp"
#include "fjdc/schedules.hpp"

namespace fjdc {

inline constexpr const char* kCsvHeader = "t,log10_avg_distance,ratio,rho_upper,rho_lower";
inline constexpr double kLogFloor = 1e-15;

struct Fixture {
    WeightedNetwork wn;  // spectral data attached
    Vector x0;
    std::uint64_t graph_seed = 0;
    std::uint64_t resamples = 0;     // rejected (disconnected) graph draws
    std::uint64_t graph_draws = 0;
    std::uint64_t weight_draws = 0;
    std::uint64_t x0_draws = 0;
};

inline Fixture build_fixture(const ExperimentConfig& cfg) {
    const auto n = static_cast<std::size_t>(cfg.n);
    // Graph seeds start from a derived stream so that nearby user seeds do not
    // walk into the same connected draw.
    std::uint64_t graph_seed = derive_seed(cfg.seed, 0);
    std::uint64_t resamples = 0;
    std::uint64_t graph_draws = 0;
    std::optional<Network> net;
    switch (cfg.graph.kind) {
        case GraphKind::ErdosRenyi: {
            const std::uint64_t per_graph = n * (n - 1) / 2;
            while (true) {
                auto candidate = generate_erdos_renyi(n, cfg.graph.p, graph_seed);
                graph_draws += per_graph;
                if (candidate.connected()) {
                    net = std::move(candidate);
                    break;
                }
                if (++resamples >= cfg.graph.max_resamples)
                    throw DisconnectedNetwork("no connected Erdos-Renyi graph after " + std::to_string(resamples) + " draws");
                ++graph_seed;
            }
            break;
        }
        case GraphKind::Path: net = path_graph(n); break;
        case GraphKind::Star: net = star_graph(n); break;
        case GraphKind::Complete: net = complete_graph(n); break;
    }

    std::uint64_t weight_draws = 0;
    auto wn = [&] {
        switch (cfg.weights) {
            case WeightsKind::Metropolis: return metropolis_weights(*net);
            case WeightsKind::LazyMetropolis: return lazy_metropolis_weights(*net);
            case WeightsKind::RandomRowStochastic: {
                UniformSource source(derive_seed(cfg.seed, 1));
                auto out = row_stochastic_weights(*net, [&source] { return source.positive(); });
                weight_draws = source.draws();
                return out;
            }
        }
        throw InvalidParameter("unknown weights kind");
    }();
    wn = ensure_spectral(wn);

    Vector x0(static_cast<Eigen::Index>(n));
    std::uint64_t x0_draws = 0;
    if (cfg.x0.kind == InitialKind::Uniform) {
        UniformSource source(derive_seed(cfg.seed, 2));
        for (Eigen::Index i = 0; i < x0.size(); ++i) x0(i) = cfg.x0.lo + (cfg.x0.hi - cfg.x0.lo) * source();
        x0_draws = source.draws();
    } else {
        for (Eigen::Index i = 0; i < x0.size(); ++i) x0(i) = cfg.x0.values[static_cast<std::size_t>(i)];
    }
    return Fixture{std::move(wn), std::move(x0), graph_seed, resamples, graph_draws, weight_draws, x0_draws};
}

namespace detail {

inline std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

}  // namespace detail

/// Per-step CSV. Bound columns are filled only for t >= 1 on doubly
/// stochastic weights with a uniform schedule (rho_upper additionally needs a
/// vanishing schedule); other cells are left empty.
inline std::string render_csv(const Trajectory& traj, const std::optional<CompetitionSchedule>& sched, const WeightedNetwork& wn,
                              const TruncationPolicy& trunc, bool avg_of_logs) {
    const auto& dist = traj.distance();
    const auto& mad = traj.mean_abs_distance();
    const bool ratio_ok = !dist.empty() && dist.front() >= 1e-14;
    const bool bounds_ok = sched && wn.doubly_stochastic() && wn.spectral();
    const bool upper_ok = bounds_ok && sched->vanishing();
    const double sigma = wn.spectral() ? wn.spectral()->sigma_max : 0.0;

    std::string out = kCsvHeader;
    if (avg_of_logs) out += ",avg_log10_distance";
    out += '\n';
    for (std::size_t t = 0; t < dist.size(); ++t) {
        out += std::to_string(t);
        out += ',';
        out += format_double(std::log10(std::max(mad[t], kLogFloor)));
        out += ',';
        if (ratio_ok) out += format_double(dist[t] / dist.front());
        out += ',';
        if (upper_ok && t >= 1) out += detail::csv_number(upper_bound(sigma, *sched, t, trunc));
        out += ',';
        if (bounds_ok && t >= 1) out += detail::csv_number(lower_bound(sigma, *sched, t));
        if (avg_of_logs) {
            out += ',';
            if (traj.has_state(t)) {
                const auto& x = traj.state(t).x;
                double acc = 0.0;
                for (Eigen::Index i = 0; i < x.size(); ++i) acc += std::log10(std::max(std::abs(x(i) - traj.x_ss()), kLogFloor));
                out += format_double(acc / static_cast<double>(x.size()));
            }
        }
        out += '\n';
    }
    return out;
}

struct ScheduleOutcome {
    std::string name;
    std::filesystem::path csv;
    std::optional<std::size_t> converged_at;  // mean |x - x_ss| < conv for 10 steps
    double final_avg_distance = 0.0;
    std::optional<UpperBound> horizon_bound;   // envelope tails at t = horizon
    std::optional<DeviationReport> deviation;  // adversarial schedules
};

struct ExperimentResult {
    Fixture fixture;
    std::vector<ScheduleOutcome> schedules;
    std::filesystem::path manifest;
};

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed for " + path.string());
}

inline std::string vector_text(const Vector& v) {
    std::vector<double> xs(v.data(), v.data() + v.size());
    return format_list(xs);
}

inline std::size_t adversarial_target(const ScheduleSpec& spec, const Vector& x0) {
    return spec.target ? static_cast<std::size_t>(*spec.target - 1) : argmax(x0);
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
    Fixture fx = build_fixture(cfg);
    std::filesystem::create_directories(out_dir);
    const auto horizon = static_cast<std::size_t>(cfg.horizon);
    const auto& spec = *fx.wn.spectral();

    KvDocument manifest;
    auto& run = manifest.add("run");
    run.set("seed", std::to_string(cfg.seed));
    run.set("graph", to_string(cfg.graph.kind));
    run.set("graph_seed", std::to_string(fx.graph_seed));
    run.set("resamples", std::to_string(fx.resamples));
    run.set("graph_draws", std::to_string(fx.graph_draws));
    run.set("weight_draws", std::to_string(fx.weight_draws));
    run.set("x0_draws", std::to_string(fx.x0_draws));
    run.set("n", std::to_string(cfg.n));
    run.set("edges", std::to_string(fx.wn.network().edges().size()));
    run.set("horizon", std::to_string(cfg.horizon));
    run.set("weights", to_string(cfg.weights));
    run.set("sigma_max", format_double(spec.sigma_max));
    run.set("second_rayleigh", format_double(spec.rayleigh));
    run.set("x_ss", format_double(spec.perron.dot(fx.x0)));
    run.set("perron", detail::vector_text(spec.perron));
    run.set("x0", detail::vector_text(fx.x0));
    run.set("underflow", format_double(cfg.tol.trunc.underflow));
    run.set("tail_eps", format_double(cfg.tol.trunc.tail_eps));

    ExperimentResult result{std::move(fx), {}, out_dir / "manifest.txt"};
    const Fixture& f = result.fixture;

    for (const auto& s : cfg.schedules) {
        ScheduleOutcome outcome;
        outcome.name = s.name;
        outcome.csv = out_dir / (s.name + ".csv");
        auto& sec = manifest.add("schedule." + s.name);
        sec.set("kind", to_string(s.kind));
        sec.set("csv", outcome.csv.filename().string());

        std::optional<Trajectory> traj;
        std::optional<CompetitionSchedule> sched;
        if (s.uniform()) {
            sched = s.to_schedule();
            if (sched->non_monotone()) sec.set("warning", "non-monotone custom schedule");
            traj = simulate(f.wn, f.x0, *sched, horizon);
            if (f.wn.doubly_stochastic() && sched->vanishing()) {
                outcome.horizon_bound = upper_bound_detail(spec.sigma_max, *sched, horizon, cfg.tol.trunc);
                sec.set("hold_tail_status", to_string(outcome.horizon_bound->hold_tail.status));
                sec.set("hold_tail_truncation", std::to_string(outcome.horizon_bound->hold_tail.truncation_index));
                sec.set("input_tail_status", to_string(outcome.horizon_bound->input_tail.status));
                sec.set("input_tail_truncation", std::to_string(outcome.horizon_bound->input_tail.truncation_index));
                sec.set("tail_remainder", format_double(outcome.horizon_bound->remainder));
            }
        } else {
            const std::size_t target = detail::adversarial_target(s, f.x0);
            const auto nonuni = make_adversarial_nonuniform(static_cast<std::size_t>(s.tstar), target);
            traj = simulate(f.wn, f.x0, nonuni, horizon);
            outcome.deviation = deviation_experiment(f.wn, f.x0, static_cast<std::size_t>(s.tstar), target);
            sec.set("tstar", std::to_string(s.tstar));
            sec.set("target", std::to_string(target + 1));
            sec.set("y_consensus_value", format_double(outcome.deviation->y_consensus_value));
            sec.set("deviation", format_double(outcome.deviation->deviation));
            sec.set("degenerate", outcome.deviation->degenerate ? "true" : "false");
        }

        outcome.converged_at = convergence_time(traj->mean_abs_distance(), cfg.tol.conv);
        outcome.final_avg_distance = traj->mean_abs_distance().back();
        sec.set("converged_at", outcome.converged_at ? std::to_string(*outcome.converged_at) : "never");
        sec.set("final_avg_distance", format_double(outcome.final_avg_distance));

        detail::write_file(outcome.csv, render_csv(*traj, sched, f.wn, cfg.tol.trunc, cfg.avg_of_logs));
        result.schedules.push_back(std::move(outcome));
    }

    detail::write_file(result.manifest, to_kv_text(manifest));
    return result;
}

struct VerifyOptions {
    bool self_test = false;  // subtract 0.1 from the upper bound to exercise the harness
    std::uint64_t seed = 1;
};

struct VerifyReport {
    std::vector<SandwichReport> reports;
    std::vector<std::string> skipped;  // per-agent schedules carry no envelope
    double tolerance = 1e-8;

    bool passed() const {
        return std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.passed(); });
    }
};

inline VerifyReport verify_bounds(const ExperimentConfig& cfg, const VerifyOptions& opt = {}) {
    const Fixture fx = build_fixture(cfg);
    if (!is_symmetric(fx.wn.W()) || !fx.wn.doubly_stochastic())
        throw AsymmetricWeights(std::string("bound verification needs symmetric doubly stochastic weights, got ") + to_string(cfg.weights));
    for (const auto& s : cfg.schedules)
        if (s.uniform() && !s.to_schedule().vanishing())
            throw NonVanishingSchedule("schedule '" + s.name + "' does not vanish");

    VerifyReport rep;
    SandwichOptions so;
    so.horizon = static_cast<std::size_t>(cfg.verify.horizon);
    so.random_trials = static_cast<std::size_t>(cfg.verify.trials);
    so.seed = derive_seed(opt.seed ^ cfg.seed, 3);
    so.upper_shift = opt.self_test ? -0.1 : 0.0;
    so.trunc = cfg.tol.trunc;
    rep.tolerance = so.tolerance;
    for (const auto& s : cfg.schedules) {
        if (!s.uniform()) {
            rep.skipped.push_back(s.name);
            continue;
        }
        auto r = check_sandwich(fx.wn, s.to_schedule(), so);
        r.schedule = s.name;
        rep.reports.push_back(std::move(r));
    }
    return rep;
}

inline std::string render_verify_report(const VerifyReport& rep) {
    KvDocument doc;
    auto& top = doc.top();
    top.set("status", rep.passed() ? "pass" : "fail");
    top.set("tolerance", format_double(rep.tolerance));
    if (!rep.skipped.empty()) {
        std::string names;
        for (const auto& s : rep.skipped) names += (names.empty() ? "" : ", ") + s;
        top.set("skipped", names);
    }
    auto margin = [](double v) { return std::isfinite(v) ? format_double(v) : std::string("n/a"); };
    for (const auto& r : rep.reports) {
        auto& sec = doc.add("schedule." + r.schedule);
        sec.set("status", r.passed() ? "pass" : "fail");
        sec.set("sigma_max", format_double(r.sigma_max));
        sec.set("witness_checked", r.witness_checked ? "true" : "false");
        sec.set("witness_lower_violation", margin(r.witness_lower_violation));
        sec.set("witness_upper_violation", margin(r.witness_upper_violation));
        sec.set("witness_equality_error", margin(r.witness_equality_error));
        sec.set("random_trials", std::to_string(r.random_trials));
        sec.set("random_upper_violation", margin(r.random_upper_violation));
    }
    return to_kv_text(doc);
}

}  // namespace fjdc
