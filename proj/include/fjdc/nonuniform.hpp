#pragma once

// Per-agent competition can move the consensus point: pinning the agent with
// the largest initial opinion for a while and then releasing it (so that
// lambda_t -> 0 trivially) still lands the network above x_ss.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "fjdc/dynamics.hpp"
#include "fjdc/errors.hpp"
#include "fjdc/graph.hpp"
#include "fjdc/schedules.hpp"

namespace fjdc {

struct TstarOptions {
    // Certification window end; default is 10x the DeGroot convergence time.
    std::optional<std::size_t> t_cap;
    double convergence_eps = 1e-10;
    std::size_t max_steps = 10'000'000;
};

struct TstarResult {
    std::size_t tstar = 0;
    std::size_t t_cap = 0;
    double terminal_gap = 0.0;  // |x_{t_cap}^target - x_ss|
};

/// Smallest t* such that plain consensus keeps the target strictly below its
/// initial opinion on every step of [t*, t_cap].
inline TstarResult find_tstar_certified(const WeightedNetwork& wn_in, const Vector& x0, std::size_t target,
                                        const TstarOptions& opt = {}) {
    const WeightedNetwork wn = ensure_spectral(wn_in);
    if (x0.size() != static_cast<Eigen::Index>(wn.size())) throw DimensionMismatch("x0 size differs from network size");
    if (target >= wn.size()) throw InvalidParameter("target agent " + std::to_string(target) + " out of range");
    const auto tgt = static_cast<Eigen::Index>(target);
    const double x_ss = wn.spectral()->perron.dot(x0);
    const double start = x0(tgt);
    if (x_ss >= start - 1e-12)
        throw NoStrictDrop("consensus value " + std::to_string(x_ss) + " is not below the target's initial opinion " + std::to_string(start));

    const Matrix& w = wn.W();
    std::vector<double> target_path{start};
    Vector x = x0;
    std::size_t settle = 0;
    while ((x.array() - x_ss).abs().maxCoeff() >= opt.convergence_eps) {
        if (settle >= opt.max_steps) throw ConvergenceFailure("consensus did not settle within max_steps");
        x = w * x;
        target_path.push_back(x(tgt));
        ++settle;
    }
    const std::size_t t_cap = opt.t_cap.value_or(std::max<std::size_t>(10 * settle, 1));
    while (target_path.size() <= t_cap) {
        x = w * x;
        target_path.push_back(x(tgt));
    }

    TstarResult out;
    out.t_cap = t_cap;
    out.terminal_gap = std::abs(target_path[t_cap] - x_ss);
    std::size_t t = t_cap + 1;
    while (t > 0 && target_path[t - 1] < start) --t;
    if (t > t_cap) throw NoStrictDrop("target is not below its initial opinion at t_cap");
    out.tstar = t;
    return out;
}

inline std::size_t find_tstar(const WeightedNetwork& wn, const Vector& x0, std::size_t target, const TstarOptions& opt = {}) {
    return find_tstar_certified(wn, x0, target, opt).tstar;
}

struct DeviationReport {
    double x_limit_nominal = 0.0;   // x_ss = v^T x0
    Vector y_limit;                 // non-uniform run after post-switch consensus
    double y_consensus_value = 0.0; // v^T y_{tstar}
    double deviation = 0.0;         // |v^T y_{tstar} - x_ss|
    std::size_t tstar = 0;
    std::size_t target = 0;
    // max over i and t <= tstar of x_t^i - y_t^i; <= 0 when the pinned agent
    // holds a largest opinion.
    double dominance_violation = 0.0;
    std::size_t post_switch_steps = 0;
    double limit_spread = 0.0;      // max(y_limit) - min(y_limit)
    bool degenerate = false;        // deviation numerically zero
};

struct DeviationOptions {
    double consensus_eps = 1e-13;   // stop when the spread of y falls below this
    std::size_t max_steps = 10'000'000;
};

inline DeviationReport deviation_experiment(const WeightedNetwork& wn_in, const Vector& x0, std::size_t tstar, std::size_t target,
                                            const DeviationOptions& opt = {}) {
    const WeightedNetwork wn = ensure_spectral(wn_in);
    if (x0.size() != static_cast<Eigen::Index>(wn.size())) throw DimensionMismatch("x0 size differs from network size");
    if (target >= wn.size()) throw InvalidParameter("target agent " + std::to_string(target) + " out of range");
    const Vector& v = wn.spectral()->perron;
    const Matrix& w = wn.W();
    const auto sched = make_adversarial_nonuniform(tstar, target);

    DeviationReport rep;
    rep.tstar = tstar;
    rep.target = target;
    rep.x_limit_nominal = v.dot(x0);

    const Vector zeros = Vector::Zero(x0.size());
    State y{0, x0};
    State x{0, x0};
    rep.dominance_violation = 0.0;
    while (y.t < tstar) {
        y = step_nonuniform(y, x0, w, sched.vector_at(wn.size(), y.t));
        x = step_nonuniform(x, x0, w, zeros);
        rep.dominance_violation = std::max(rep.dominance_violation, (x.x - y.x).maxCoeff());
    }
    rep.y_consensus_value = v.dot(y.x);
    rep.deviation = std::abs(rep.y_consensus_value - rep.x_limit_nominal);
    rep.degenerate = rep.deviation <= 1e-12;

    Vector yy = y.x;
    std::size_t steps = 0;
    while (yy.maxCoeff() - yy.minCoeff() >= opt.consensus_eps) {
        if (steps >= opt.max_steps) throw ConvergenceFailure("post-switch consensus did not settle");
        yy = w * yy;
        ++steps;
    }
    rep.y_limit = yy;
    rep.post_switch_steps = steps;
    rep.limit_spread = yy.maxCoeff() - yy.minCoeff();
    return rep;
}

// Index of a largest entry (the first one on ties).
inline std::size_t argmax(const Vector& x) {
    Eigen::Index idx = 0;
    x.maxCoeff(&idx);
    return static_cast<std::size_t>(idx);
}

}  // namespace fjdc
