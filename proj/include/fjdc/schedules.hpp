#pragma once

// Competition (stubbornness) schedules and the products
//
//     L(s, t) = prod_{k=s..t} (1 - lambda_k),   L(s, t) = 1 when s > t,
//
// including their limits as t -> infinity and the weighted input series
// sum_{k>=t} L(k+1, inf) lambda_k that appear in the rate envelope.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fjdc/errors.hpp"

namespace fjdc {

enum class ScheduleKind { Constant, Exponential, Hyperbolic, ZeroConsensus, Custom };

inline const char* to_string(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::Constant: return "constant";
        case ScheduleKind::Exponential: return "exponential";
        case ScheduleKind::Hyperbolic: return "hyperbolic";
        case ScheduleKind::ZeroConsensus: return "zero";
        case ScheduleKind::Custom: return "custom";
    }
    return "?";
}

struct ScheduleParams {
    double lambda = 0.0;          // Constant
    double rate = 0.0;            // Exponential
    std::vector<double> values;   // Custom
};

/// Uniform competition sequence t -> lambda_t in [0, 1].
class CompetitionSchedule {
public:
    static CompetitionSchedule constant(double lambda) {
        check_unit(lambda, "constant lambda");
        CompetitionSchedule s(ScheduleKind::Constant);
        s.lambda_ = lambda;
        return s;
    }

    // lambda_t = exp(-rate * t)
    static CompetitionSchedule exponential(double rate) {
        if (!(rate > 0.0) || !std::isfinite(rate)) throw InvalidParameter("exponential rate must be positive");
        CompetitionSchedule s(ScheduleKind::Exponential);
        s.rate_ = rate;
        return s;
    }

    // lambda_t = 1 / (t + 1)
    static CompetitionSchedule hyperbolic() { return CompetitionSchedule(ScheduleKind::Hyperbolic); }

    static CompetitionSchedule zero_consensus() { return CompetitionSchedule(ScheduleKind::ZeroConsensus); }

    // Finite prefix, zero afterwards.
    static CompetitionSchedule custom(std::vector<double> values) {
        for (double v : values) check_unit(v, "custom lambda");
        CompetitionSchedule s(ScheduleKind::Custom);
        s.values_ = std::move(values);
        s.suffix_.assign(s.values_.size() + 1, 0.0);
        for (std::size_t i = s.values_.size(); i-- > 0;) s.suffix_[i] = s.suffix_[i + 1] + s.values_[i];
        return s;
    }

    ScheduleKind kind() const noexcept { return kind_; }
    double constant_value() const noexcept { return lambda_; }
    double rate() const noexcept { return rate_; }
    const std::vector<double>& values() const noexcept { return values_; }

    double at(std::size_t t) const {
        switch (kind_) {
            case ScheduleKind::Constant: return lambda_;
            case ScheduleKind::Exponential: return std::exp(-rate_ * static_cast<double>(t));
            case ScheduleKind::Hyperbolic: return 1.0 / (static_cast<double>(t) + 1.0);
            case ScheduleKind::ZeroConsensus: return 0.0;
            case ScheduleKind::Custom: return t < values_.size() ? values_[t] : 0.0;
        }
        return 0.0;
    }
    double operator()(std::size_t t) const { return at(t); }

    // lambda_t -> 0
    bool vanishing() const noexcept { return !(kind_ == ScheduleKind::Constant && lambda_ > 0.0); }

    // sum_k lambda_k = infinity, which forces L(s, inf) = 0 for every finite s.
    bool series_diverges() const noexcept {
        return kind_ == ScheduleKind::Hyperbolic || (kind_ == ScheduleKind::Constant && lambda_ > 0.0);
    }

    // Upper bound on sum_{j >= k} lambda_j (infinity when divergent).
    double tail_sum_bound(std::size_t k) const {
        switch (kind_) {
            case ScheduleKind::Constant:
                return lambda_ > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
            case ScheduleKind::Exponential:
                return std::exp(-rate_ * static_cast<double>(k)) / -std::expm1(-rate_);
            case ScheduleKind::Hyperbolic: return std::numeric_limits<double>::infinity();
            case ScheduleKind::ZeroConsensus: return 0.0;
            case ScheduleKind::Custom: return k < values_.size() ? suffix_[k] : 0.0;
        }
        return 0.0;
    }

    // Custom schedules may increase; the limit results still hold but the
    // library only asserts them for vanishing schedules.
    bool non_monotone() const {
        for (std::size_t i = 1; i < values_.size(); ++i)
            if (values_[i] > values_[i - 1]) return true;
        return false;
    }

    std::string describe() const {
        switch (kind_) {
            case ScheduleKind::Constant: return "constant(" + std::to_string(lambda_) + ")";
            case ScheduleKind::Exponential: return "exponential(" + std::to_string(rate_) + ")";
            case ScheduleKind::Custom: return "custom[" + std::to_string(values_.size()) + "]";
            default: return to_string(kind_);
        }
    }

private:
    explicit CompetitionSchedule(ScheduleKind k) : kind_(k) {}

    static void check_unit(double v, const char* what) {
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidParameter(std::string(what) + " outside [0,1]: " + std::to_string(v));
    }

    ScheduleKind kind_;
    double lambda_ = 0.0;
    double rate_ = 0.0;
    std::vector<double> values_;
    std::vector<double> suffix_;
};

inline CompetitionSchedule make_schedule(ScheduleKind kind, const ScheduleParams& params = {}) {
    switch (kind) {
        case ScheduleKind::Constant: return CompetitionSchedule::constant(params.lambda);
        case ScheduleKind::Exponential: return CompetitionSchedule::exponential(params.rate);
        case ScheduleKind::Hyperbolic: return CompetitionSchedule::hyperbolic();
        case ScheduleKind::ZeroConsensus: return CompetitionSchedule::zero_consensus();
        case ScheduleKind::Custom: return CompetitionSchedule::custom(params.values);
    }
    throw InvalidParameter("unknown schedule kind");
}

struct TruncationPolicy {
    double underflow = 1e-14;   // partial products below this are reported as 0
    double tail_eps = 1e-14;    // stop once the remaining lambda mass is below this
    std::size_t max_terms = 50'000'000;

    bool operator==(const TruncationPolicy&) const = default;
};

enum class TailStatus {
    Exact,        // finite support or exact zero factor
    Divergent,    // sum of lambda diverges: product is exactly 0
    NonVanishing, // constant lambda > 0: product is exactly 0, flagged
    Underflow,    // partial product fell below the underflow cutoff
    Truncated,    // remaining lambda mass certified below tail_eps
};

inline const char* to_string(TailStatus s) {
    switch (s) {
        case TailStatus::Exact: return "exact";
        case TailStatus::Divergent: return "divergent";
        case TailStatus::NonVanishing: return "non-vanishing";
        case TailStatus::Underflow: return "underflow";
        case TailStatus::Truncated: return "truncated";
    }
    return "?";
}

// Value of an infinite product or series together with how it was obtained.
// The true value lies within `error_bound` of `value`.
struct TailValue {
    double value = 0.0;
    TailStatus status = TailStatus::Exact;
    std::size_t truncation_index = 0;  // first index treated as lambda = 0
    double error_bound = 0.0;
};

/// L(s, t) for finite t; 1 for s > t.
inline double lambda_product(const CompetitionSchedule& sched, std::size_t s, std::size_t t) {
    double p = 1.0;
    for (std::size_t k = s; k <= t; ++k) p *= 1.0 - sched.at(k);
    return p;
}

namespace detail {

// First index L >= from with sum_{j>=L} lambda_j < eps.
inline std::size_t truncation_point(const CompetitionSchedule& sched, std::size_t from, const TruncationPolicy& trunc) {
    if (sched.kind() == ScheduleKind::Custom) {
        std::size_t end = std::max(from, sched.values().size());
        std::size_t lo = from;
        while (lo < end && sched.tail_sum_bound(lo) >= trunc.tail_eps) ++lo;
        return lo;
    }
    if (sched.kind() == ScheduleKind::ZeroConsensus ||
        (sched.kind() == ScheduleKind::Constant && sched.constant_value() == 0.0))
        return from;
    std::size_t k = from;
    while (sched.tail_sum_bound(k) >= trunc.tail_eps) {
        if (k - from >= trunc.max_terms) throw ConvergenceFailure("tail truncation exceeded max_terms");
        ++k;
    }
    return k;
}

}  // namespace detail

/// L(s, infinity).
inline TailValue lambda_product_infinite(const CompetitionSchedule& sched, std::size_t s, const TruncationPolicy& trunc = {}) {
    if (sched.series_diverges()) {
        const auto status = sched.vanishing() ? TailStatus::Divergent : TailStatus::NonVanishing;
        return {0.0, status, s, 0.0};
    }
    const std::size_t end = detail::truncation_point(sched, s, trunc);
    double p = 1.0;
    for (std::size_t k = s; k < end; ++k) {
        p *= 1.0 - sched.at(k);
        if (p == 0.0) return {0.0, TailStatus::Exact, k + 1, 0.0};
        if (p < trunc.underflow) return {0.0, TailStatus::Underflow, k + 1, trunc.underflow};
    }
    const double remainder = sched.tail_sum_bound(end);
    if (remainder == 0.0) return {p, TailStatus::Exact, end, 0.0};
    return {p, TailStatus::Truncated, end, p * remainder};
}

/// sum_{k >= from} L(k+1, infinity) lambda_k.
inline TailValue input_series_tail(const CompetitionSchedule& sched, std::size_t from, const TruncationPolicy& trunc = {}) {
    if (sched.series_diverges()) {
        const auto status = sched.vanishing() ? TailStatus::Divergent : TailStatus::NonVanishing;
        return {0.0, status, from, 0.0};
    }
    const std::size_t end = detail::truncation_point(sched, from, trunc);
    // Backward accumulation; `after` holds L(k+1, end-1).
    double sum = 0.0;
    double after = 1.0;
    for (std::size_t k = end; k-- > from;) {
        const double lk = sched.at(k);
        sum += after * lk;
        after *= 1.0 - lk;
    }
    const double remainder = sched.tail_sum_bound(end);
    if (remainder == 0.0) return {sum, TailStatus::Exact, end, 0.0};
    return {sum, TailStatus::Truncated, end, remainder};
}

/// Per-agent competition (i, t) -> lambda_t^i, where lambda_t is the vector
/// applied by the step that produces state t+1.
class NonUniformSchedule {
public:
    using Fn = std::function<double(std::size_t agent, std::size_t t)>;

    struct Holdout {
        std::size_t target;  // 0-based agent index
        std::size_t tstar;   // target's state is pinned to x0 for states 0..tstar
    };

    explicit NonUniformSchedule(Fn fn, std::optional<std::size_t> quiet_from = std::nullopt,
                                std::optional<Holdout> holdout = std::nullopt)
        : fn_(std::move(fn)), quiet_from_(quiet_from), holdout_(holdout) {}

    double at(std::size_t agent, std::size_t t) const {
        const double v = fn_(agent, t);
        if (!(v >= 0.0 && v <= 1.0))
            throw InvalidParameter("non-uniform lambda outside [0,1] at agent " + std::to_string(agent) + ", t=" + std::to_string(t));
        return v;
    }

    Eigen::VectorXd vector_at(std::size_t n, std::size_t t) const {
        Eigen::VectorXd out(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(i)) = at(i, t);
        return out;
    }

    // Every entry is zero for steps t >= quiet_from (when known).
    std::optional<std::size_t> quiet_from() const noexcept { return quiet_from_; }
    const std::optional<Holdout>& holdout() const noexcept { return holdout_; }

private:
    Fn fn_;
    std::optional<std::size_t> quiet_from_;
    std::optional<Holdout> holdout_;
};

/// Holdout schedule: the target agent keeps its initial opinion through state
/// tstar (lambda = 1 on steps 0..tstar-1), every other entry is zero. After
/// tstar the protocol is plain consensus, so limit = 1 v^T y_{tstar}.
inline NonUniformSchedule make_adversarial_nonuniform(std::size_t tstar, std::size_t target) {
    auto fn = [tstar, target](std::size_t agent, std::size_t t) {
        return agent == target && t < tstar ? 1.0 : 0.0;
    };
    return NonUniformSchedule(fn, tstar, NonUniformSchedule::Holdout{target, tstar});
}

}  // namespace fjdc
