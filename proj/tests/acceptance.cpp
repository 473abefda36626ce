// Acceptance checks, one PASS/FAIL line per criterion.
//
//   fjdc_acceptance --cli <path to fjdc> --config <section4.ini> --work <dir>

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fjdc/bounds.hpp"
#include "fjdc/config.hpp"
#include "fjdc/dynamics.hpp"
#include "fjdc/experiment.hpp"
#include "fjdc/nonuniform.hpp"
#include "fjdc/schedules.hpp"

using namespace fjdc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

// Collects sub-check results; the first failing message is kept.
struct Checker {
    Outcome out;
    std::ostringstream notes;

    void require(bool ok, const std::string& what) {
        if (!ok && out.pass) {
            out.pass = false;
            out.detail = what;
        }
    }
    void note(const std::string& s) { notes << (notes.tellp() > 0 ? "; " : "") << s; }
    Outcome done() {
        if (out.pass) out.detail = notes.str();
        return out;
    }
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

Network connected_er(std::size_t n, double p, std::uint64_t seed) {
    for (std::uint64_t s = seed;; ++s) {
        auto net = generate_erdos_renyi(n, p, s);
        if (net.connected()) return net;
    }
}

Vector random_x0(std::size_t n, std::uint64_t seed) {
    UniformSource u(seed);
    Vector x(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = 5.0 * u();
    return x;
}

std::vector<CompetitionSchedule> five_kinds() {
    return {CompetitionSchedule::constant(0.3), CompetitionSchedule::exponential(0.5), CompetitionSchedule::hyperbolic(),
            CompetitionSchedule::zero_consensus(), CompetitionSchedule::custom({0.9, 0.4, 0.0, 0.7, 0.2, 0.05})};
}

std::vector<CompetitionSchedule> vanishing_kinds() {
    return {CompetitionSchedule::exponential(0.5), CompetitionSchedule::exponential(0.05), CompetitionSchedule::hyperbolic(),
            CompetitionSchedule::zero_consensus(), CompetitionSchedule::custom({0.9, 0.4, 0.0, 0.7, 0.2, 0.05})};
}

std::vector<WeightedNetwork> small_fixtures() {
    return {ensure_spectral(metropolis_weights(path_graph(6))), ensure_spectral(lazy_metropolis_weights(star_graph(7))),
            ensure_spectral(metropolis_weights(complete_graph(5))), ensure_spectral(metropolis_weights(connected_er(20, 0.2, 11))),
            ensure_spectral(row_stochastic_weights(connected_er(15, 0.3, 5), 9))};
}

std::vector<WeightedNetwork> lazy_fixtures() {
    return {ensure_spectral(lazy_metropolis_weights(connected_er(20, 0.2, 3))),
            ensure_spectral(lazy_metropolis_weights(connected_er(20, 0.1, 17))),
            ensure_spectral(lazy_metropolis_weights(path_graph(10))), ensure_spectral(lazy_metropolis_weights(star_graph(8)))};
}

// 1
Outcome partition_of_unity() {
    Checker c;
    double worst = 0.0;
    for (const auto& s : five_kinds())
        for (std::size_t t : {0, 1, 5, 50, 500}) {
            double acc = lambda_product(s, 0, t);
            for (std::size_t k = 0; k <= t; ++k) acc += lambda_product(s, k + 1, t) * s(k);
            worst = std::max(worst, std::abs(acc - 1.0));
        }
    c.require(worst < 1e-12, "max error " + num(worst));
    c.note("max error " + num(worst));
    return c.done();
}

// 2
Outcome hyperbolic_closed_form() {
    Checker c;
    const auto h = CompetitionSchedule::hyperbolic();
    UniformSource u(2024);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const auto t = static_cast<std::size_t>(u() * 10001.0);
        const auto s = static_cast<std::size_t>(u() * static_cast<double>(t + 1));
        worst = std::max(worst, std::abs(lambda_product(h, s, t) - static_cast<double>(s) / static_cast<double>(t + 1)));
    }
    c.require(worst < 1e-12, "max error " + num(worst));
    c.note("10000 pairs, max error " + num(worst));
    return c.done();
}

// 3
Outcome decomposition_oracle() {
    Checker c;
    double worst = 0.0;
    std::uint64_t seed = 1;
    for (const auto& wn : small_fixtures())
        for (const auto& sched : vanishing_kinds()) {
            const Vector x0 = random_x0(wn.size(), seed++);
            const auto traj = simulate(wn, x0, sched, 200);
            TransitionSweep sweep(wn.W(), sched);
            for (std::size_t t = 1; t <= 200; ++t) {
                const auto d = sweep.at(t);
                worst = std::max(worst, ((d.psi_aut + d.psi_in) * x0 - traj.state(t).x).lpNorm<Eigen::Infinity>());
            }
        }
    c.require(worst < 1e-10, "max error " + num(worst));
    c.note("5 fixtures x 5 schedules, max error " + num(worst));
    return c.done();
}

// 4
Outcome forward_direction(const Fixture& fx) {
    Checker c;
    const double sigma = fx.wn.spectral()->sigma_max;
    const double tau = -1.0 / std::log(sigma);
    const auto exp_budget = static_cast<std::size_t>(std::ceil(200.0 * tau));
    const auto et = simulate(fx.wn, fx.x0, CompetitionSchedule::exponential(0.5), exp_budget);
    const auto& ed = et.mean_abs_distance();
    const auto ehit = std::find_if(ed.begin(), ed.end(), [](double d) { return d < 1e-6; });
    c.require(ehit != ed.end(), "exponential avg distance " + num(ed.back()) + " at t=" + std::to_string(exp_budget));
    if (ehit != ed.end()) c.note("exponential < 1e-6 at t=" + std::to_string(ehit - ed.begin()) + " (budget " + std::to_string(exp_budget) + ")");

    const auto ht = simulate(fx.wn, fx.x0, CompetitionSchedule::hyperbolic(), 10000);
    const auto& hd = ht.mean_abs_distance();
    const auto hhit = std::find_if(hd.begin(), hd.end(), [](double d) { return d < 1e-3; });
    c.require(hhit != hd.end(), "hyperbolic avg distance " + num(hd.back()) + " at t=10000 (threshold 1e-3, sigma_max " + num(sigma) + ")");
    if (hhit != hd.end()) c.note("hyperbolic < 1e-3 at t=" + std::to_string(hhit - hd.begin()));
    return c.done();
}

// 5
Outcome reverse_direction(const Fixture& fx) {
    Checker c;
    std::vector<std::pair<WeightedNetwork, Vector>> cases{{fx.wn, fx.x0}};
    std::uint64_t seed = 50;
    for (auto& wn : small_fixtures()) cases.emplace_back(wn, random_x0(wn.size(), seed++));
    double worst = 0.0, smallest = 1e300;
    for (const auto& [wn, x0] : cases) {
        const double x_ss = wn.spectral()->perron.dot(x0);
        const auto traj = simulate(wn, x0, CompetitionSchedule::constant(0.3), 2000);
        const Vector fp = fj_equilibrium(wn.W(), x0, 0.3);
        const double expected = (fp.array() - x_ss).matrix().norm();
        worst = std::max(worst, std::abs(traj.distance().back() - expected));
        smallest = std::min(smallest, traj.distance().back());
    }
    c.require(worst < 1e-6, "terminal distance mismatch " + num(worst));
    c.require(smallest > 1e-3, "terminal distance " + num(smallest) + " not above 1e-3");
    c.note(std::to_string(cases.size()) + " fixtures, mismatch " + num(worst) + ", min terminal distance " + num(smallest));
    return c.done();
}

// 6
Outcome sandwich() {
    Checker c;
    SandwichOptions opt;
    opt.horizon = 500;
    opt.random_trials = 100;
    double lower_v = -1e300, upper_v = -1e300, random_v = -1e300;
    std::size_t runs = 0;
    for (const auto& wn : lazy_fixtures())
        for (const auto& sched : {CompetitionSchedule::exponential(0.5), CompetitionSchedule::hyperbolic(),
                                  CompetitionSchedule::zero_consensus(), CompetitionSchedule::custom({0.6, 0.3, 0.1})}) {
            const auto r = check_sandwich(wn, sched, opt);
            c.require(r.witness_checked, "witness skipped on a lazy fixture");
            c.require(r.random_trials == 100, "random trials skipped");
            lower_v = std::max(lower_v, r.witness_lower_violation);
            upper_v = std::max(upper_v, r.witness_upper_violation);
            random_v = std::max(random_v, r.random_upper_violation);
            ++runs;
        }
    c.require(lower_v <= 1e-8, "witness below lower bound by " + num(lower_v));
    c.require(upper_v <= 1e-8, "witness above upper bound by " + num(upper_v));
    c.require(random_v <= 1e-8, "random start above upper bound by " + num(random_v));
    c.note(std::to_string(runs) + " fixture/schedule pairs; max margins lower " + num(lower_v) + ", upper " + num(upper_v) +
           ", random " + num(random_v));
    return c.done();
}

// 7
Outcome gap_independence() {
    Checker c;
    const auto a = ensure_spectral(metropolis_weights(complete_graph(10)));
    const auto b = ensure_spectral(lazy_metropolis_weights(path_graph(10)));
    const double sa = a.spectral()->sigma_max, sb = b.spectral()->sigma_max;
    c.require(std::abs(sa - sb) >= 0.2, "sigma_max values too close");
    double between = 0.0, algebraic = 0.0;
    for (const auto& sched : vanishing_kinds())
        for (std::size_t t = 1; t <= 500; ++t) {
            const double ga = upper_bound(sa, sched, t) - lower_bound(sa, sched, t);
            const double gb = upper_bound(sb, sched, t) - lower_bound(sb, sched, t);
            const double g = gap(sched, t);
            between = std::max(between, std::abs(ga - gb));
            algebraic = std::max({algebraic, std::abs(ga - g), std::abs(gb - g)});
        }
    c.require(between < 1e-10, "gap series differ by " + num(between));
    c.require(algebraic < 1e-10, "upper - lower differs from gap by " + num(algebraic));
    c.note("sigma_max " + num(sa) + " vs " + num(sb) + "; series diff " + num(between) + ", identity diff " + num(algebraic));
    return c.done();
}

// 8
Outcome hyperbolic_order(const Fixture& fx) {
    Checker c;
    const double s = fx.wn.spectral()->sigma_max;
    const auto h = CompetitionSchedule::hyperbolic();
    const double cap = 1.0 / (1.0 - s);
    double worst_lower = -1e300, worst_gap = 0.0;
    for (std::size_t t = 1; t <= 10000; ++t) {
        worst_lower = std::max(worst_lower, static_cast<double>(t) * lower_bound(s, h, t) - cap);
        worst_gap = std::max(worst_gap, std::abs(gap(h, t) - 1.0));
    }
    c.require(worst_lower <= 1e-10, "t*lower exceeds 1/(1-sigma) by " + num(worst_lower));
    c.require(worst_gap < 1e-10, "hyperbolic gap differs from 1 by " + num(worst_gap));
    c.note("max t*lower - 1/(1-sigma) = " + num(worst_lower) + ", max |gap - 1| = " + num(worst_gap));
    return c.done();
}

// 9
Outcome deviation(const Fixture& fx) {
    Checker c;
    const auto rep = deviation_experiment(fx.wn, fx.x0, 100, argmax(fx.x0));
    c.require(rep.deviation > 1e-3, "deviation " + num(rep.deviation));
    c.require(rep.limit_spread < 1e-12, "no consensus after the switch");
    c.require(std::abs(rep.y_limit.mean() - rep.y_consensus_value) < 1e-10, "limit differs from v^T y_t*");

    const auto two = ensure_spectral(metropolis_weights(path_graph(2)));
    Vector x0(2);
    x0 << 1.0, 0.0;
    const auto small = deviation_experiment(two, x0, 1, 0);
    c.require(std::abs(small.y_consensus_value - 0.75) < 1e-12, "two-agent limit " + num(small.y_consensus_value));
    c.require(std::abs(small.x_limit_nominal - 0.5) < 1e-12, "two-agent x_ss " + num(small.x_limit_nominal));
    c.note("deviation " + num(rep.deviation) + " (limit " + num(rep.y_consensus_value) + " vs x_ss " + num(rep.x_limit_nominal) +
           "); two-agent limit 3/4 vs 1/2");
    return c.done();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// 10
Outcome determinism(const std::string& cli, const std::string& config, const fs::path& work) {
    Checker c;
    if (cli.empty()) {
        c.require(false, "no --cli given");
        return c.done();
    }
    std::vector<fs::path> dirs{work / "det_a", work / "det_b"};
    for (const auto& d : dirs) {
        fs::remove_all(d);
        const std::string cmd = "\"" + cli + "\" run \"" + config + "\" --quiet --out \"" + d.string() + "\"";
        c.require(std::system(cmd.c_str()) == 0, "CLI run failed: " + cmd);
    }
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
        if (entry.path().extension() != ".csv") continue;
        ++files;
        const auto other = dirs[1] / entry.path().filename();
        c.require(slurp(entry.path()) == slurp(other), entry.path().filename().string() + " differs");
    }
    c.require(files > 0, "no CSV files written");
    c.note(std::to_string(files) + " CSV files identical across two runs");
    return c.done();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks"};
    std::string cli, config, work = "acceptance_work";
    app.add_option("--cli", cli, "path to the fjdc executable");
    app.add_option("--config", config, "experiment config for the 20-agent setup")->required();
    app.add_option("--work", work, "scratch directory");
    CLI11_PARSE(app, argc, argv);

    const auto cfg = load_config(config);
    const Fixture fx = build_fixture(cfg);
    fs::create_directories(work);
    std::cout << "setup: seed " << cfg.seed << ", graph seed " << fx.graph_seed << " after " << fx.resamples
              << " rejected draws, sigma_max " << num(fx.wn.spectral()->sigma_max) << "\n";

    struct Criterion {
        int id;
        const char* name;
        double budget_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "partition of unity", 1, partition_of_unity},
        {2, "hyperbolic product closed form", 1, hyperbolic_closed_form},
        {3, "transition decomposition matches simulation", 60, decomposition_oracle},
        {4, "vanishing competition reaches consensus", 10, [&] { return forward_direction(fx); }},
        {5, "constant competition misses consensus", 1, [&] { return reverse_direction(fx); }},
        {6, "rate sandwich on lazy Metropolis fixtures", 30, sandwich},
        {7, "gap does not depend on sigma_max", 5, gap_independence},
        {8, "hyperbolic O(1/t) rate", 5, [&] { return hyperbolic_order(fx); }},
        {9, "per-agent holdout shifts the consensus", 5, [&] { return deviation(fx); }},
        {10, "CLI output is deterministic", 10, [&] { return determinism(cli, config, work); }},
    };

    int failed = 0;
    for (const auto& cr : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = cr.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (o.pass && secs > cr.budget_s) o = {false, "took " + num(secs) + " s, budget " + num(cr.budget_s) + " s"};
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << cr.id << "] " << cr.name << " (" << num(secs) << " s): " << o.detail << "\n";
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
