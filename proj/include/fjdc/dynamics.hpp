#pragma once

// The three protocols (DeGroot, uniform FJ, per-agent FJ) and the closed-form
// transition decomposition x_t = (Psi_aut(t) + Psi_in(t)) x_0 of the uniform
// protocol, with
//     Psi_aut(t) = L(0, t-1) W^t
//     Psi_in(t)  = sum_{k<t} L(k+1, t-1) lambda_k W^{t-1-k}.

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "fjdc/errors.hpp"
#include "fjdc/graph.hpp"
#include "fjdc/schedules.hpp"

namespace fjdc {

struct State {
    std::size_t t = 0;
    Vector x;
};

namespace detail {

inline void check_step_dims(const Vector& x, const Vector& x0, const Matrix& w) {
    if (w.rows() != w.cols() || x.size() != w.cols() || x0.size() != x.size())
        throw DimensionMismatch("state " + std::to_string(x.size()) + ", x0 " + std::to_string(x0.size()) +
                                ", W " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()));
}

}  // namespace detail

// (1 - lambda) W x + lambda x0. W x is formed first, then the convex
// combination entry by entry, identical to step_nonuniform's order.
inline State step_uniform(const State& s, const Vector& x0, const Matrix& w, double lambda) {
    detail::check_step_dims(s.x, x0, w);
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidParameter("lambda outside [0,1]");
    const Vector wx = w * s.x;
    State out{s.t + 1, Vector(wx.size())};
    for (Eigen::Index i = 0; i < wx.size(); ++i) out.x(i) = (1.0 - lambda) * wx(i) + lambda * x0(i);
    return out;
}

// diag(1 - lambda) W x + diag(lambda) x0
inline State step_nonuniform(const State& s, const Vector& x0, const Matrix& w, const Vector& lambda) {
    detail::check_step_dims(s.x, x0, w);
    if (lambda.size() != s.x.size()) throw DimensionMismatch("lambda vector has " + std::to_string(lambda.size()) + " entries");
    const Vector wx = w * s.x;
    State out{s.t + 1, Vector(wx.size())};
    for (Eigen::Index i = 0; i < wx.size(); ++i) {
        const double l = lambda(i);
        if (!(l >= 0.0 && l <= 1.0)) throw InvalidParameter("lambda entry outside [0,1]");
        out.x(i) = (1.0 - l) * wx(i) + l * x0(i);
    }
    return out;
}

struct SimulationOptions {
    // Full state history is kept while (horizon + 1) * n stays within this;
    // beyond it only every `checkpoint_stride`-th state is stored.
    std::size_t full_storage_limit = 100'001 * 1'000;
    std::size_t checkpoint_stride = 100;
};

/// Recorded run. Distance series cover every t in [0, horizon]; states are
/// kept for every t, or for multiples of stride() on very long runs.
class Trajectory {
public:
    Trajectory(Vector x0, double x_ss, std::size_t stride, std::string label)
        : x0_(std::move(x0)), x_ss_(x_ss), stride_(stride), label_(std::move(label)) {}

    const Vector& x0() const noexcept { return x0_; }
    double x_ss() const noexcept { return x_ss_; }
    std::size_t horizon() const noexcept { return l2_.empty() ? 0 : l2_.size() - 1; }
    std::size_t stride() const noexcept { return stride_; }
    const std::string& label() const noexcept { return label_; }

    // ||x_t - x_ss 1||_2
    const std::vector<double>& distance() const noexcept { return l2_; }
    // (1/n) sum_i |x_t^i - x_ss|
    const std::vector<double>& mean_abs_distance() const noexcept { return mean_abs_; }
    const std::vector<State>& states() const noexcept { return states_; }

    bool has_state(std::size_t t) const noexcept { return t <= horizon() && t % stride_ == 0; }
    const State& state(std::size_t t) const {
        if (!has_state(t)) throw InvalidParameter("state " + std::to_string(t) + " not stored");
        return states_[t / stride_];
    }
    const State& back() const { return last_; }

    void record(const State& s) {
        const Vector diff = s.x.array() - x_ss_;
        l2_.push_back(diff.norm());
        mean_abs_.push_back(diff.cwiseAbs().mean());
        if (s.t % stride_ == 0) states_.push_back(s);
        last_ = s;
    }

private:
    Vector x0_;
    double x_ss_;
    std::size_t stride_;
    std::string label_;
    std::vector<State> states_;
    std::vector<double> l2_;
    std::vector<double> mean_abs_;
    State last_;
};

namespace detail {

template <class Step>
Trajectory run(const WeightedNetwork& wn, const Vector& x0, std::size_t horizon, const SimulationOptions& opt,
               std::string label, Step&& step) {
    if (x0.size() != static_cast<Eigen::Index>(wn.size()))
        throw DimensionMismatch("x0 has " + std::to_string(x0.size()) + " entries, network has " + std::to_string(wn.size()));
    if (!x0.allFinite()) throw InvalidParameter("x0 must be finite");
    const Vector perron = wn.spectral() ? wn.spectral()->perron : compute_spectral(wn).perron;
    const double x_ss = perron.dot(x0);
    const bool full = (horizon + 1) * wn.size() <= opt.full_storage_limit;
    Trajectory traj(x0, x_ss, full ? 1 : opt.checkpoint_stride, std::move(label));
    State s{0, x0};
    traj.record(s);
    for (std::size_t t = 0; t < horizon; ++t) {
        s = step(s);
        traj.record(s);
    }
    return traj;
}

}  // namespace detail

inline Trajectory simulate(const WeightedNetwork& wn, const Vector& x0, const CompetitionSchedule& sched,
                           std::size_t horizon, const SimulationOptions& opt = {}) {
    const Matrix& w = wn.W();
    return detail::run(wn, x0, horizon, opt, sched.describe(),
                       [&](const State& s) { return step_uniform(s, x0, w, sched.at(s.t)); });
}

inline Trajectory simulate(const WeightedNetwork& wn, const Vector& x0, const NonUniformSchedule& sched,
                           std::size_t horizon, const SimulationOptions& opt = {}) {
    const Matrix& w = wn.W();
    const auto n = wn.size();
    return detail::run(wn, x0, horizon, opt, "non-uniform",
                       [&](const State& s) { return step_nonuniform(s, x0, w, sched.vector_at(n, s.t)); });
}

/// First t at which `series` drops below eps and stays there for `window`
/// consecutive entries.
inline std::optional<std::size_t> convergence_time(const std::vector<double>& series, double eps, std::size_t window = 10) {
    std::size_t run = 0;
    for (std::size_t t = 0; t < series.size(); ++t) {
        run = series[t] < eps ? run + 1 : 0;
        if (run == window) return t + 1 - window;
    }
    return std::nullopt;
}

/// Fixed point lambda (I - (1 - lambda) W)^{-1} x0 of the constant-lambda protocol.
inline Vector fj_equilibrium(const Matrix& w, const Vector& x0, double lambda) {
    if (!(lambda > 0.0 && lambda <= 1.0)) throw InvalidParameter("equilibrium needs lambda in (0,1]");
    const auto n = w.rows();
    const Matrix a = Matrix::Identity(n, n) - (1.0 - lambda) * w;
    return a.partialPivLu().solve(lambda * x0);
}

struct TransitionDecomposition {
    std::size_t t = 0;
    Matrix psi_aut;
    Matrix psi_in;
};

/// Closed-form Psi_aut(t), Psi_in(t) for t = 1, 2, ...; powers W^k are cached
/// so a sweep over t costs one matrix multiply per new power.
class TransitionSweep {
public:
    TransitionSweep(Matrix w, CompetitionSchedule sched) : w_(std::move(w)), sched_(std::move(sched)) {
        powers_.push_back(Matrix::Identity(w_.rows(), w_.cols()));
    }

    const Matrix& power(std::size_t k) {
        while (powers_.size() <= k) powers_.push_back(w_ * powers_.back());
        return powers_[k];
    }

    TransitionDecomposition at(std::size_t t) {
        if (t < 1) throw InvalidParameter("transition decomposition needs t >= 1");
        TransitionDecomposition d;
        d.t = t;
        d.psi_aut = lambda_product(sched_, 0, t - 1) * power(t);
        d.psi_in = Matrix::Zero(w_.rows(), w_.cols());
        for (std::size_t k = 0; k < t; ++k) {
            const double coeff = lambda_product(sched_, k + 1, t - 1) * sched_.at(k);
            if (coeff != 0.0) d.psi_in += coeff * power(t - 1 - k);
        }
        return d;
    }

private:
    Matrix w_;
    CompetitionSchedule sched_;
    std::vector<Matrix> powers_;
};

inline TransitionDecomposition transition_decomposition(const WeightedNetwork& wn, const CompetitionSchedule& sched, std::size_t t) {
    TransitionSweep sweep(wn.W(), sched);
    return sweep.at(t);
}

inline TransitionDecomposition transition_decomposition(const WeightedNetwork&, const NonUniformSchedule&, std::size_t) {
    throw NonUniformUnsupported("the autonomous/input decomposition is defined for uniform competition only");
}

struct InputLimit {
    Vector y;                 // lim Psi_in(t) = 1 y^T
    double coefficient = 0.0; // 1 - L(0, inf)
    TailValue series;         // sum_k L(k+1, inf) lambda_k, term by term
    TailValue autonomous;     // L(0, inf)
};

/// y = v * (1 - L(0, inf)). For a summable schedule this equals the series
/// sum_{k>=0} L(k+1, inf) lambda_k. When sum lambda_k diverges every term of
/// that series is 0, yet Psi_in(t) still tends to 1 v^T; the coefficient is
/// taken from the finite-t identity L(0,t) + sum_k L(k+1,t) lambda_k = 1.
inline InputLimit input_limit_vector(const WeightedNetwork& wn, const CompetitionSchedule& sched, const TruncationPolicy& trunc = {}) {
    if (!sched.vanishing()) throw NonVanishingSchedule(sched.describe() + " does not vanish");
    const Vector perron = wn.spectral() ? wn.spectral()->perron : compute_spectral(wn).perron;
    InputLimit out;
    out.series = input_series_tail(sched, 0, trunc);
    out.autonomous = lambda_product_infinite(sched, 0, trunc);
    out.coefficient = sched.series_diverges() ? 1.0 - out.autonomous.value : out.series.value;
    out.y = perron * out.coefficient;
    return out;
}

}  // namespace fjdc
