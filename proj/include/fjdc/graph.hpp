#pragma once

// Communication networks and the stochastic weight matrices the dynamics run on.
//
// Agents are indexed 0..n-1 throughout the library. Edges are undirected and
// stored once as (i, j) with i < j; self-loops are not edges, but every agent
// is its own augmented neighbor, so W_ii > 0 always.

#include <Eigen/Dense>

#include <algorithm>
#include <concepts>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fjdc/errors.hpp"
#include "fjdc/random.hpp"

namespace fjdc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Edge = std::pair<std::size_t, std::size_t>;

class Network {
public:
    static Network from_edges(std::size_t n, std::vector<Edge> edges, std::uint64_t seed = 0) {
        if (n == 0) throw InvalidParameter("network needs at least one agent");
        for (auto& [i, j] : edges) {
            if (i == j) throw InvalidParameter("self-loop (" + std::to_string(i) + "," + std::to_string(j) + ")");
            if (i >= n || j >= n) throw InvalidParameter("edge endpoint outside 0.." + std::to_string(n - 1));
            if (i > j) std::swap(i, j);
        }
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
        return Network(n, std::move(edges), seed);
    }

    std::size_t size() const noexcept { return n_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    std::uint64_t seed() const noexcept { return seed_; }
    bool connected() const noexcept { return connected_; }

    // Neighbors of i, excluding i itself, in increasing order.
    std::span<const std::size_t> neighbors(std::size_t i) const { return adjacency_.at(i); }
    std::size_t degree(std::size_t i) const { return adjacency_.at(i).size(); }

    bool has_edge(std::size_t i, std::size_t j) const {
        if (i == j) return false;
        const auto& nb = adjacency_.at(i);
        return std::binary_search(nb.begin(), nb.end(), j);
    }

private:
    Network(std::size_t n, std::vector<Edge> edges, std::uint64_t seed)
        : n_(n), edges_(std::move(edges)), seed_(seed), adjacency_(n) {
        for (const auto& [i, j] : edges_) {
            adjacency_[i].push_back(j);
            adjacency_[j].push_back(i);
        }
        for (auto& nb : adjacency_) std::sort(nb.begin(), nb.end());
        connected_ = reachable_count() == n_;
    }

    std::size_t reachable_count() const {
        std::vector<char> seen(n_, 0);
        std::queue<std::size_t> frontier;
        frontier.push(0);
        seen[0] = 1;
        std::size_t count = 1;
        while (!frontier.empty()) {
            const auto i = frontier.front();
            frontier.pop();
            for (auto j : adjacency_[i]) {
                if (!seen[j]) {
                    seen[j] = 1;
                    ++count;
                    frontier.push(j);
                }
            }
        }
        return count;
    }

    std::size_t n_;
    std::vector<Edge> edges_;
    std::uint64_t seed_;
    std::vector<std::vector<std::size_t>> adjacency_;
    bool connected_ = false;
};

// Each pair (i, j), i < j, visited in lexicographic order, is kept when one
// draw from UniformSource(seed) falls below p. Exactly n(n-1)/2 draws.
inline Network generate_erdos_renyi(std::size_t n, double p, std::uint64_t seed) {
    if (n < 2) throw InvalidParameter("Erdos-Renyi graph needs n >= 2");
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameter("edge probability must lie in [0,1]");
    UniformSource draw(seed);
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (draw() < p) edges.emplace_back(i, j);
    return Network::from_edges(n, std::move(edges), seed);
}

inline Network path_graph(std::size_t n) {
    std::vector<Edge> edges;
    for (std::size_t i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
    return Network::from_edges(n, std::move(edges));
}

// Agent 0 is the center.
inline Network star_graph(std::size_t n) {
    std::vector<Edge> edges;
    for (std::size_t i = 1; i < n; ++i) edges.emplace_back(0, i);
    return Network::from_edges(n, std::move(edges));
}

inline Network complete_graph(std::size_t n) {
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) edges.emplace_back(i, j);
    return Network::from_edges(n, std::move(edges));
}

/// Spectral quantities of a primitive stochastic W.
///
/// `perron` is the stochastic left eigenvector (W^T v = v). `sigma_max` is the
/// largest singular value of the consensus-deflated matrix W - 1 v^T (the
/// second largest singular value of W when W is doubly stochastic), with
/// right/left singular vectors `v2`/`u2`, both unit norm and v2 orthogonal to 1.
struct SpectralData {
    Vector perron;
    double sigma_max = 0.0;
    Vector v2;
    Vector u2;
    // v2^T W v2; negative when sigma_max is realized by a negative eigenvalue
    // of a symmetric W.
    double rayleigh = 0.0;
    double perron_residual = 0.0;
    double singular_residual = 0.0;
    std::size_t perron_iterations = 0;
    std::size_t singular_iterations = 0;
};

enum class WeightKind { RowStochastic, DoublyStochastic };

inline const char* to_string(WeightKind k) {
    return k == WeightKind::DoublyStochastic ? "doubly-stochastic" : "row-stochastic";
}

inline constexpr double kStochasticTolerance = 1e-12;

inline bool is_symmetric(const Matrix& w, double tol = kStochasticTolerance) {
    return w.rows() == w.cols() && (w - w.transpose()).cwiseAbs().maxCoeff() <= tol;
}

/// Exact primitivity test on the zero pattern of a square nonnegative matrix.
///
/// A primitive matrix has every power beyond its exponent positive, and the
/// exponent never exceeds the Wielandt bound (n-1)^2 + 1 = n^2 - 2n + 2.
/// Repeated boolean squaring reaches a power >= that bound in O(log n) steps.
inline bool is_primitive(const Matrix& w) {
    const auto n = static_cast<std::size_t>(w.rows());
    if (n == 0 || w.cols() != w.rows()) return false;
    const std::size_t words = (n + 63) / 64;
    using Rows = std::vector<std::vector<std::uint64_t>>;
    Rows pattern(n, std::vector<std::uint64_t>(words, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0)
                pattern[i][j / 64] |= std::uint64_t{1} << (j % 64);

    auto square = [&](const Rows& a) {
        Rows out(n, std::vector<std::uint64_t>(words, 0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k)
                if (a[i][k / 64] >> (k % 64) & 1U)
                    for (std::size_t wdx = 0; wdx < words; ++wdx) out[i][wdx] |= a[k][wdx];
        return out;
    };
    auto all_positive = [&](const Rows& a) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (!(a[i][j / 64] >> (j % 64) & 1U)) return false;
        return true;
    };

    const std::size_t wielandt = (n - 1) * (n - 1) + 1;
    std::size_t power = 1;
    while (power < wielandt) {
        pattern = square(pattern);
        power *= 2;
    }
    return all_positive(pattern);
}

class WeightedNetwork {
public:
    // Validates every structural invariant; throws InvalidParameter or
    // NotPrimitive on violation.
    static WeightedNetwork create(Network net, Matrix w, WeightKind kind) {
        const auto n = static_cast<Eigen::Index>(net.size());
        if (w.rows() != n || w.cols() != n)
            throw DimensionMismatch("weight matrix is " + std::to_string(w.rows()) + "x" +
                                    std::to_string(w.cols()) + ", network has " + std::to_string(n) + " agents");
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                const double wij = w(i, j);
                if (!std::isfinite(wij) || wij < 0.0) throw InvalidParameter("negative or non-finite weight");
                const bool linked = i == j || net.has_edge(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
                if (linked != (wij > 0.0))
                    throw InvalidParameter("weight support differs from the augmented neighborhood at (" +
                                           std::to_string(i) + "," + std::to_string(j) + ")");
            }
            if (std::abs(w.row(i).sum() - 1.0) > kStochasticTolerance)
                throw InvalidParameter("row " + std::to_string(i) + " does not sum to 1");
        }
        if (kind == WeightKind::DoublyStochastic) {
            for (Eigen::Index j = 0; j < n; ++j)
                if (std::abs(w.col(j).sum() - 1.0) > kStochasticTolerance)
                    throw InvalidParameter("column " + std::to_string(j) + " does not sum to 1");
            if (!is_symmetric(w)) throw InvalidParameter("doubly stochastic weights must be symmetric");
        }
        if (!is_primitive(w)) throw NotPrimitive("weight matrix has no positive power");
        return WeightedNetwork(std::move(net), std::move(w), kind);
    }

    const Network& network() const noexcept { return net_; }
    const Matrix& W() const noexcept { return w_; }
    WeightKind kind() const noexcept { return kind_; }
    std::size_t size() const noexcept { return net_.size(); }
    bool doubly_stochastic() const noexcept { return kind_ == WeightKind::DoublyStochastic; }

    const std::optional<SpectralData>& spectral() const noexcept { return spectral_; }

    WeightedNetwork with_spectral(SpectralData s) const {
        WeightedNetwork out = *this;
        out.spectral_ = std::move(s);
        return out;
    }

private:
    WeightedNetwork(Network net, Matrix w, WeightKind kind)
        : net_(std::move(net)), w_(std::move(w)), kind_(kind) {}

    Network net_;
    Matrix w_;
    WeightKind kind_;
    std::optional<SpectralData> spectral_;
};

inline void require_connected(const Network& net) {
    if (!net.connected()) throw DisconnectedNetwork("network with " + std::to_string(net.size()) + " agents is not connected");
}

// W_ij = 1 / (1 + max(d_i, d_j)) on edges, remainder on the diagonal.
inline WeightedNetwork metropolis_weights(const Network& net) {
    require_connected(net);
    const auto n = static_cast<Eigen::Index>(net.size());
    Matrix w = Matrix::Zero(n, n);
    for (const auto& [i, j] : net.edges()) {
        const double wij = 1.0 / (1.0 + static_cast<double>(std::max(net.degree(i), net.degree(j))));
        w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = wij;
        w(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = wij;
    }
    for (Eigen::Index i = 0; i < n; ++i) w(i, i) = 1.0 - w.row(i).sum();
    return WeightedNetwork::create(net, std::move(w), WeightKind::DoublyStochastic);
}

// (W + I) / 2 of the Metropolis matrix: same Perron vector, spectrum in (0, 1].
inline WeightedNetwork lazy_metropolis_weights(const Network& net) {
    const auto base = metropolis_weights(net);
    const auto n = static_cast<Eigen::Index>(net.size());
    Matrix w = 0.5 * (base.W() + Matrix::Identity(n, n));
    for (Eigen::Index i = 0; i < n; ++i) {
        w(i, i) = 0.0;
        w(i, i) = 1.0 - w.row(i).sum();
    }
    return WeightedNetwork::create(net, std::move(w), WeightKind::DoublyStochastic);
}

/// Random row-stochastic weights: each row draws one positive value per agent
/// in N(i) ∪ {i} (diagonal first, then neighbors in index order) and
/// normalizes. `draw` must return strictly positive values.
template <std::invocable Draw>
WeightedNetwork row_stochastic_weights(const Network& net, Draw&& draw) {
    require_connected(net);
    const auto n = static_cast<Eigen::Index>(net.size());
    Matrix w = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        w(i, i) = draw();
        for (auto j : net.neighbors(ui)) w(i, static_cast<Eigen::Index>(j)) = draw();
        if (!(w.row(i).minCoeff() >= 0.0)) throw InvalidParameter("weight draw produced a negative value");
        w.row(i) /= w.row(i).sum();
    }
    return WeightedNetwork::create(net, std::move(w), WeightKind::RowStochastic);
}

inline WeightedNetwork row_stochastic_weights(const Network& net, std::uint64_t seed) {
    UniformSource source(seed);
    return row_stochastic_weights(net, [&source] { return source.positive(); });
}

struct SpectralOptions {
    double tolerance = 1e-10;          // residual that must be met
    double refine_tolerance = 1e-14;   // keep iterating until this, when reachable
    std::size_t max_iterations = 100000;
    // Iterations allowed past `tolerance` while chasing `refine_tolerance`.
    std::size_t refine_budget = 5000;
};

namespace detail {

// Deterministic start vector, orthogonal to 1 and unlikely to be orthogonal
// to any particular eigenvector.
inline Vector start_vector(Eigen::Index n) {
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = std::sin(1.3 * static_cast<double>(i) + 0.7) + 0.01 * static_cast<double>(i);
    return x;
}

inline void project_out_ones(Vector& x) { x.array() -= x.mean(); }

}  // namespace detail

/// Perron vector by power iteration on W^T, then the dominant singular triple
/// of the deflated matrix M = W - 1 v^T by power iteration on M^T M.
inline SpectralData compute_spectral(const WeightedNetwork& wn, const SpectralOptions& opt = {}) {
    const Matrix& w = wn.W();
    const auto n = w.rows();
    SpectralData out;

    Vector v = Vector::Constant(n, 1.0 / static_cast<double>(n));
    const Matrix wt = w.transpose();
    double residual = (wt * v - v).lpNorm<Eigen::Infinity>();
    std::size_t it = 0;
    std::size_t met_at = residual < opt.tolerance ? 0 : opt.max_iterations;
    auto keep_going = [&] {
        if (residual < opt.tolerance) met_at = std::min(met_at, it);
        return residual >= opt.refine_tolerance && it < opt.max_iterations &&
               (met_at == opt.max_iterations || it - met_at < opt.refine_budget);
    };
    while (keep_going()) {
        v = wt * v;
        v /= v.sum();
        residual = (wt * v - v).lpNorm<Eigen::Infinity>();
        ++it;
    }
    if (residual >= opt.tolerance)
        throw ConvergenceFailure("Perron iteration residual " + std::to_string(residual) + " after " + std::to_string(it) + " iterations");
    out.perron = v;
    out.perron_residual = residual;
    out.perron_iterations = it;

    // Deflation by 1 v^T; for doubly stochastic W this is 11^T/n.
    const Vector deflate = wn.doubly_stochastic() ? Vector::Constant(n, 1.0 / static_cast<double>(n)) : v;
    const Matrix m = w - Vector::Ones(n) * deflate.transpose();
    const Matrix gram = m.transpose() * m;

    Vector x = detail::start_vector(n);
    detail::project_out_ones(x);
    x.normalize();
    double lambda = x.dot(gram * x);
    residual = (gram * x - lambda * x).lpNorm<Eigen::Infinity>();
    it = 0;
    met_at = opt.max_iterations;
    while (keep_going()) {
        Vector y = gram * x;
        detail::project_out_ones(y);
        const double norm = y.norm();
        if (norm < 1e-300) break;  // M = 0: every direction orthogonal to 1 is singular
        x = y / norm;
        lambda = x.dot(gram * x);
        residual = (gram * x - lambda * x).lpNorm<Eigen::Infinity>();
        ++it;
    }
    if (residual >= opt.tolerance)
        throw ConvergenceFailure("singular iteration residual " + std::to_string(residual) + " after " + std::to_string(it) + " iterations");

    const Vector mx = m * x;
    out.sigma_max = mx.norm();
    out.v2 = x;
    out.u2 = out.sigma_max > 1e-300 ? Vector(mx / out.sigma_max) : x;
    out.rayleigh = x.dot(w * x);
    out.singular_residual = residual;
    out.singular_iterations = it;
    return out;
}

// Copy of wn with spectral data attached (computed if absent).
inline WeightedNetwork ensure_spectral(const WeightedNetwork& wn, const SpectralOptions& opt = {}) {
    if (wn.spectral()) return wn;
    return wn.with_spectral(compute_spectral(wn, opt));
}

}  // namespace fjdc
