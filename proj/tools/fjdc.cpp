// Experiment CLI: run, verify and tstar subcommands over a config file.
//
// Exit status: 0 success, 1 bound violation, 2 config or usage error,
// 3 runtime failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "fjdc/config.hpp"
#include "fjdc/errors.hpp"
#include "fjdc/experiment.hpp"
#include "fjdc/nonuniform.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kUsage = 2;
constexpr int kRuntime = 3;

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> horizon;
    std::string out;
    bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("config", c.config, "config file")->required();
    cmd->add_option("--seed", c.seed, "override the config seed");
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--horizon", c.horizon, "override the config horizon")->check(CLI::PositiveNumber);
    cmd->add_flag("--quiet", c.quiet, "suppress progress output");
}

fjdc::ExperimentConfig load(const Common& c) {
    auto cfg = fjdc::load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (c.horizon) cfg.horizon = *c.horizon;
    return cfg;
}

// --out, then the config's [output] dir, then EXPERIMENT_OUT_DIR, then "out".
std::filesystem::path output_dir(const Common& c, const fjdc::ExperimentConfig& cfg) {
    if (!c.out.empty()) return c.out;
    if (!cfg.output_dir.empty()) return cfg.output_dir;
    if (const char* env = std::getenv("EXPERIMENT_OUT_DIR"); env && *env) return env;
    return "out";
}

void warn_non_monotone(const fjdc::ExperimentConfig& cfg) {
    for (const auto& s : cfg.schedules)
        if (s.uniform() && s.to_schedule().non_monotone())
            std::cerr << "warning: schedule '" << s.name << "' is not non-increasing\n";
}

int cmd_run(const Common& c) {
    const auto cfg = load(c);
    warn_non_monotone(cfg);
    const auto dir = output_dir(c, cfg);
    const auto res = fjdc::run_experiment(cfg, dir);
    if (!c.quiet) {
        const auto& sp = *res.fixture.wn.spectral();
        std::cout << "sigma_max " << fjdc::format_double(sp.sigma_max) << ", x_ss "
                  << fjdc::format_double(sp.perron.dot(res.fixture.x0)) << ", resamples " << res.fixture.resamples << '\n';
        for (const auto& s : res.schedules) {
            std::cout << s.name << ": " << s.csv.string() << ", final avg distance " << fjdc::format_double(s.final_avg_distance);
            if (s.converged_at) std::cout << ", converged at t=" << *s.converged_at;
            if (s.deviation) std::cout << ", deviation " << fjdc::format_double(s.deviation->deviation);
            std::cout << '\n';
        }
        std::cout << "manifest: " << res.manifest.string() << '\n';
    }
    return kOk;
}

int cmd_verify(const Common& c, bool self_test) {
    const auto cfg = load(c);
    const auto dir = output_dir(c, cfg);
    fjdc::VerifyOptions opt;
    opt.self_test = self_test;
    const auto rep = fjdc::verify_bounds(cfg, opt);
    const auto text = fjdc::render_verify_report(rep);
    std::filesystem::create_directories(dir);
    fjdc::detail::write_file(dir / "verify_report.txt", text);
    if (!c.quiet) std::cout << text;
    return rep.passed() ? kOk : kViolation;
}

int cmd_tstar(const Common& c, std::uint64_t target) {
    const auto cfg = load(c);
    if (target < 1 || target > cfg.n)
        throw fjdc::InvalidParameter("--target must lie in 1.." + std::to_string(cfg.n));
    const auto fx = fjdc::build_fixture(cfg);
    const auto r = fjdc::find_tstar_certified(fx.wn, fx.x0, static_cast<std::size_t>(target - 1));
    if (c.quiet)
        std::cout << r.tstar << '\n';
    else
        std::cout << "tstar = " << r.tstar << "\nt_cap = " << r.t_cap << "\nterminal_gap = " << fjdc::format_double(r.terminal_gap) << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Friedkin-Johnsen dynamics with diminishing competition"};
    app.require_subcommand(1);

    Common run_opts, verify_opts, tstar_opts;
    bool self_test = false;
    std::uint64_t target = 0;

    auto* run = app.add_subcommand("run", "simulate every schedule and write CSV series plus a manifest");
    add_common(run, run_opts);
    auto* verify = app.add_subcommand("verify", "check the rate envelope on the configured fixture");
    add_common(verify, verify_opts);
    verify->add_flag("--self-test", self_test, "tighten the upper bound by 0.1 so the check must fail");
    auto* tstar = app.add_subcommand("tstar", "certified switch time for a target agent");
    add_common(tstar, tstar_opts);
    tstar->add_option("--target", target, "1-based agent index")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*run) return cmd_run(run_opts);
        if (*verify) return cmd_verify(verify_opts, self_test);
        return cmd_tstar(tstar_opts, target);
    } catch (const fjdc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kUsage;
    } catch (const fjdc::InvalidParameter& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const fjdc::AsymmetricWeights& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const fjdc::NonVanishingSchedule& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
}
