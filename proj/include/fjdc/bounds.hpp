#pragma once

// Convergence-rate envelope of the uniform protocol on doubly stochastic W.
//
//   lower(t) = L(0,t-1) s^t + sum_{k<t} L(k+1,t-1) lambda_k s^{t-1-k}
//   upper(t) = L(0,t-1) (s^t + 1 - L(t,inf))
//            + sum_{k<t} L(k+1,t-1) lambda_k (s^{t-1-k} + 1 - L(t,inf))
//            + sum_{k>=t} L(k+1,inf) lambda_k
//
// with s = sigma_max. The gap upper - lower does not involve s.
//
// The bounds are only claimed for doubly stochastic W, although the two-sided
// statement is sometimes phrased for every stochastic W; row-stochastic
// networks get no envelope here.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fjdc/dynamics.hpp"
#include "fjdc/errors.hpp"
#include "fjdc/graph.hpp"
#include "fjdc/random.hpp"
#include "fjdc/schedules.hpp"

namespace fjdc {

namespace detail {

inline void check_time(std::size_t t) {
    if (t < 1) throw InvalidParameter("rate bounds are defined for t >= 1");
}

inline void check_vanishing(const CompetitionSchedule& sched) {
    if (!sched.vanishing()) throw NonVanishingSchedule(sched.describe() + " does not vanish; the upper bound needs lambda_t -> 0");
}

}  // namespace detail

inline double lower_bound(double sigma_max, const CompetitionSchedule& sched, std::size_t t) {
    detail::check_time(t);
    if (!(sigma_max >= 0.0 && sigma_max <= 1.0)) throw InvalidParameter("sigma_max outside [0,1]");
    double sum = 0.0;
    double hold = 1.0;   // L(k+1, t-1)
    double spow = 1.0;   // s^{t-1-k}
    for (std::size_t k = t; k-- > 0;) {
        const double lk = sched.at(k);
        sum += hold * lk * spow;
        hold *= 1.0 - lk;
        spow *= sigma_max;
    }
    return hold * spow + sum;  // hold = L(0, t-1), spow = s^t
}

struct UpperBound {
    double value = 0.0;        // includes `remainder`
    double remainder = 0.0;    // certified allowance for the truncated tails
    TailValue hold_tail;       // L(t, inf)
    TailValue input_tail;      // sum_{k>=t} L(k+1, inf) lambda_k
};

inline UpperBound upper_bound_detail(double sigma_max, const CompetitionSchedule& sched, std::size_t t,
                                     const TruncationPolicy& trunc = {}) {
    detail::check_time(t);
    detail::check_vanishing(sched);
    if (!(sigma_max >= 0.0 && sigma_max < 1.0)) throw InvalidParameter("sigma_max outside [0,1)");
    UpperBound out;
    out.hold_tail = lambda_product_infinite(sched, t, trunc);
    out.input_tail = input_series_tail(sched, t, trunc);
    const double released = 1.0 - out.hold_tail.value;

    double sum = 0.0;
    double hold = 1.0;
    double spow = 1.0;
    for (std::size_t k = t; k-- > 0;) {
        const double lk = sched.at(k);
        sum += hold * lk * (spow + released);
        hold *= 1.0 - lk;
        spow *= sigma_max;
    }
    const double autonomous = hold * (spow + released);
    out.remainder = out.hold_tail.error_bound + out.input_tail.error_bound;
    out.value = autonomous + sum + out.input_tail.value + out.remainder;
    return out;
}

inline double upper_bound(double sigma_max, const CompetitionSchedule& sched, std::size_t t, const TruncationPolicy& trunc = {}) {
    return upper_bound_detail(sigma_max, sched, t, trunc).value;
}

/// upper - lower, evaluated term by term from the schedule alone:
///   L(0,t-1) - L(0,inf) + sum_{k<t} (L(k+1,t-1) - L(k+1,inf)) lambda_k + sum_{k>=t} L(k+1,inf) lambda_k
inline double gap(const CompetitionSchedule& sched, std::size_t t, const TruncationPolicy& trunc = {}) {
    detail::check_time(t);
    detail::check_vanishing(sched);
    double sum = 0.0;
    double hold = 1.0;  // L(k+1, t-1)
    for (std::size_t k = t; k-- > 0;) {
        const double lk = sched.at(k);
        sum += (hold - lambda_product_infinite(sched, k + 1, trunc).value) * lk;
        hold *= 1.0 - lk;
    }
    return hold - lambda_product_infinite(sched, 0, trunc).value + sum + input_series_tail(sched, t, trunc).value;
}

struct TruncationRecord {
    std::size_t t = 0;
    TailStatus status = TailStatus::Exact;
    std::size_t truncation_index = 0;
    double remainder = 0.0;
};

struct RateEnvelope {
    std::vector<std::size_t> ts;
    std::vector<double> upper;
    std::vector<double> lower;
    std::vector<double> gap;
    std::optional<std::vector<double>> empirical;
    std::vector<TruncationRecord> trunc_report;
};

/// d(t) / d(0) for every recorded t.
inline std::vector<double> empirical_ratio(const Trajectory& traj) {
    const auto& d = traj.distance();
    if (d.empty() || d.front() < 1e-14)
        throw ConsensusInitialCondition("x0 is (numerically) a consensus; the ratio is undefined");
    std::vector<double> out(d.size());
    std::transform(d.begin(), d.end(), out.begin(), [d0 = d.front()](double x) { return x / d0; });
    return out;
}

inline RateEnvelope rate_envelope(double sigma_max, const CompetitionSchedule& sched, const std::vector<std::size_t>& ts,
                                  const TruncationPolicy& trunc = {}, const Trajectory* traj = nullptr) {
    RateEnvelope env;
    env.ts = ts;
    std::vector<double> ratio;
    if (traj) {
        ratio = empirical_ratio(*traj);
        env.empirical.emplace();
    }
    for (auto t : ts) {
        const auto up = upper_bound_detail(sigma_max, sched, t, trunc);
        env.upper.push_back(up.value);
        env.lower.push_back(lower_bound(sigma_max, sched, t));
        env.gap.push_back(gap(sched, t, trunc));
        env.trunc_report.push_back({t, up.hold_tail.status, up.hold_tail.truncation_index, up.remainder});
        if (traj) {
            if (t >= ratio.size()) throw InvalidParameter("trajectory shorter than envelope time " + std::to_string(t));
            env.empirical->push_back(ratio[t]);
        }
    }
    return env;
}

/// x_ss 1 + v2: the initial condition whose deviation stays on the dominant
/// singular direction. Exact witness only for symmetric W.
inline Vector worst_case_initial_condition(const WeightedNetwork& wn, double x_ss_target) {
    if (!is_symmetric(wn.W())) throw AsymmetricWeights("worst-case witness requires W = W^T");
    const SpectralData spec = wn.spectral() ? *wn.spectral() : compute_spectral(wn);
    return Vector::Constant(static_cast<Eigen::Index>(wn.size()), x_ss_target) + spec.v2;
}

struct SandwichOptions {
    std::size_t horizon = 500;
    std::size_t random_trials = 100;
    std::uint64_t seed = 1;
    double tolerance = 1e-8;
    // Added to the upper bound before comparison; negative values make the
    // harness report violations on purpose.
    double upper_shift = 0.0;
    TruncationPolicy trunc{};
};

struct SandwichReport {
    std::string schedule;
    double sigma_max = 0.0;
    bool witness_checked = false;       // false when sigma_max comes from a negative eigenvalue
    double witness_lower_violation = 0; // max_t (lower - ratio), witness run
    double witness_upper_violation = 0; // max_t (ratio - upper), witness run
    double witness_equality_error = 0;  // max_t |ratio - lower|, witness run
    double random_upper_violation = 0;  // max over trials and t of (ratio - upper)
    std::size_t random_trials = 0;
    double tolerance = 0;

    bool passed() const {
        return witness_lower_violation <= tolerance && witness_upper_violation <= tolerance &&
               random_upper_violation <= tolerance;
    }
};

/// Runs the witness trajectory and random initial conditions against the
/// envelope for 1 <= t <= horizon.
inline SandwichReport check_sandwich(const WeightedNetwork& wn_in, const CompetitionSchedule& sched, const SandwichOptions& opt = {}) {
    if (!wn_in.doubly_stochastic()) throw InvalidParameter("rate bounds require doubly stochastic weights");
    detail::check_vanishing(sched);
    const WeightedNetwork wn = ensure_spectral(wn_in);
    const auto& spec = *wn.spectral();
    const auto n = static_cast<Eigen::Index>(wn.size());

    SandwichReport rep;
    rep.schedule = sched.describe();
    rep.sigma_max = spec.sigma_max;
    rep.tolerance = opt.tolerance;

    std::vector<double> upper(opt.horizon + 1), lower(opt.horizon + 1);
    for (std::size_t t = 1; t <= opt.horizon; ++t) {
        upper[t] = upper_bound(spec.sigma_max, sched, t, opt.trunc) + opt.upper_shift;
        lower[t] = lower_bound(spec.sigma_max, sched, t);
    }

    rep.witness_lower_violation = -std::numeric_limits<double>::infinity();
    rep.witness_upper_violation = -std::numeric_limits<double>::infinity();
    rep.random_upper_violation = -std::numeric_limits<double>::infinity();

    auto upper_violation = [&](const std::vector<double>& ratio) {
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t t = 1; t <= opt.horizon; ++t) worst = std::max(worst, ratio[t] - upper[t]);
        return worst;
    };

    const Vector witness = worst_case_initial_condition(wn, 0.0);
    const auto wtraj = simulate(wn, witness, sched, opt.horizon);
    const auto wratio = empirical_ratio(wtraj);
    rep.witness_upper_violation = upper_violation(wratio);
    rep.witness_checked = spec.rayleigh >= 0.0;
    if (rep.witness_checked) {
        for (std::size_t t = 1; t <= opt.horizon; ++t) {
            rep.witness_lower_violation = std::max(rep.witness_lower_violation, lower[t] - wratio[t]);
            rep.witness_equality_error = std::max(rep.witness_equality_error, std::abs(wratio[t] - lower[t]));
        }
    }

    UniformSource draw(opt.seed);
    for (std::size_t trial = 0; trial < opt.random_trials; ++trial) {
        Vector x0(n);
        for (Eigen::Index i = 0; i < n; ++i) x0(i) = 2.0 * draw() - 1.0;
        if ((x0.array() - x0.mean()).matrix().norm() < 1e-12) continue;
        const auto traj = simulate(wn, x0, sched, opt.horizon);
        rep.random_upper_violation = std::max(rep.random_upper_violation, upper_violation(empirical_ratio(traj)));
        ++rep.random_trials;
    }
    return rep;
}

}  // namespace fjdc
