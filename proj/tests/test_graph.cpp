#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "fjdc/graph.hpp"
#include "support.hpp"

using namespace fjdc;
using Catch::Approx;

TEST_CASE("erdos-renyi with p = 1 on two agents is a single edge") {
    for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
        const auto net = generate_erdos_renyi(2, 1.0, seed);
        REQUIRE(net.edges() == std::vector<Edge>{{0, 1}});
        CHECK(net.connected());
    }
}

TEST_CASE("erdos-renyi matches an independent pair-by-pair draw") {
    // Reference: raw mt19937_64, top 53 bits, pairs in lexicographic order.
    std::mt19937_64 eng(7);
    std::vector<Edge> expected;
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = i + 1; j < 5; ++j) {
            const double u = static_cast<double>(eng() >> 11) / 9007199254740992.0;
            if (u < 0.5) expected.emplace_back(i, j);
        }
    const auto net = generate_erdos_renyi(5, 0.5, 7);
    CHECK(net.edges() == expected);
    CHECK(net.seed() == 7);
}

TEST_CASE("erdos-renyi at the experiment size") {
    const auto net = generate_erdos_renyi(20, 0.1, 3);
    CHECK(net.size() == 20);
    CHECK(generate_erdos_renyi(20, 0.0, 3).edges().empty());
    CHECK_THROWS_AS(generate_erdos_renyi(1, 0.5, 1), InvalidParameter);
    CHECK_THROWS_AS(generate_erdos_renyi(5, 1.5, 1), InvalidParameter);
}

TEST_CASE("network construction normalizes and validates edges") {
    const auto net = Network::from_edges(4, {{2, 1}, {1, 2}, {0, 3}});
    CHECK(net.edges() == std::vector<Edge>{{0, 3}, {1, 2}});
    CHECK(net.has_edge(3, 0));
    CHECK_FALSE(net.connected());
    CHECK_THROWS_AS(Network::from_edges(3, {{1, 1}}), InvalidParameter);
    CHECK_THROWS_AS(Network::from_edges(3, {{0, 3}}), InvalidParameter);
}

TEST_CASE("metropolis weights on small graphs") {
    SECTION("two-node path") {
        const auto wn = metropolis_weights(path_graph(2));
        CHECK(wn.W().isApprox(Matrix::Constant(2, 2, 0.5), 1e-15));
    }
    SECTION("three-node star") {
        const auto w = metropolis_weights(star_graph(3)).W();
        CHECK(w(0, 1) == Approx(1.0 / 3).margin(1e-15));
        CHECK(w(0, 2) == Approx(1.0 / 3).margin(1e-15));
        CHECK(w(1, 0) == Approx(1.0 / 3).margin(1e-15));
        CHECK(w(0, 0) == Approx(1.0 / 3).margin(1e-15));
        CHECK(w(1, 1) == Approx(2.0 / 3).margin(1e-15));
        CHECK(w(2, 2) == Approx(2.0 / 3).margin(1e-15));
        CHECK(w(1, 2) == 0.0);
    }
    SECTION("disconnected input") {
        CHECK_THROWS_AS(metropolis_weights(Network::from_edges(3, {{0, 1}})), DisconnectedNetwork);
        CHECK_THROWS_AS(lazy_metropolis_weights(Network::from_edges(3, {{0, 1}})), DisconnectedNetwork);
        CHECK_THROWS_AS(row_stochastic_weights(Network::from_edges(3, {{0, 1}}), 1), DisconnectedNetwork);
    }
}

TEST_CASE("generated weights are stochastic with the right support") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto net = testing::connected_er(15, 0.25, seed * 31);
        for (const auto& wn : {metropolis_weights(net), lazy_metropolis_weights(net), row_stochastic_weights(net, seed)}) {
            const Matrix& w = wn.W();
            const Vector ones = Vector::Ones(w.rows());
            CHECK((w * ones - ones).lpNorm<Eigen::Infinity>() < 1e-12);
            if (wn.doubly_stochastic()) {
                CHECK((w.transpose() * ones - ones).lpNorm<Eigen::Infinity>() < 1e-12);
                CHECK(is_symmetric(w));
            }
            for (Eigen::Index i = 0; i < w.rows(); ++i)
                for (Eigen::Index j = 0; j < w.cols(); ++j)
                    CHECK((w(i, j) > 0.0) == (i == j || net.has_edge(static_cast<std::size_t>(i), static_cast<std::size_t>(j))));
        }
    }
}

TEST_CASE("row-stochastic weights") {
    const auto net = path_graph(2);
    SECTION("equal draws normalize uniformly") {
        const auto wn = row_stochastic_weights(net, [] { return 0.25; });
        CHECK(wn.W().isApprox(Matrix::Constant(2, 2, 0.5), 1e-15));
        CHECK(wn.kind() == WeightKind::RowStochastic);
    }
    SECTION("seeded determinism") {
        const auto g = testing::connected_er(10, 0.3, 4);
        CHECK(row_stochastic_weights(g, 3).W() == row_stochastic_weights(g, 3).W());
        CHECK(row_stochastic_weights(g, 3).W() != row_stochastic_weights(g, 4).W());
    }
}

TEST_CASE("weighted network validation") {
    const auto net = path_graph(2);
    CHECK_THROWS_AS(WeightedNetwork::create(net, Matrix::Identity(3, 3), WeightKind::RowStochastic), DimensionMismatch);
    Matrix bad(2, 2);
    bad << 0.7, 0.4, 0.5, 0.5;
    CHECK_THROWS_AS(WeightedNetwork::create(net, bad, WeightKind::RowStochastic), InvalidParameter);
    Matrix asym(2, 2);
    asym << 0.3, 0.7, 0.5, 0.5;
    CHECK_NOTHROW(WeightedNetwork::create(net, asym, WeightKind::RowStochastic));
    CHECK_THROWS_AS(WeightedNetwork::create(net, asym, WeightKind::DoublyStochastic), InvalidParameter);
    // An edgeless pair passes the support check but is not primitive.
    CHECK_THROWS_AS(WeightedNetwork::create(Network::from_edges(2, {}), Matrix::Identity(2, 2), WeightKind::DoublyStochastic),
                    NotPrimitive);
}

TEST_CASE("primitivity on zero patterns") {
    Matrix flip(2, 2);
    flip << 0, 1, 1, 0;
    CHECK_FALSE(is_primitive(flip));
    CHECK_FALSE(is_primitive(Matrix::Identity(3, 3)));
    // Wielandt's extremal matrix: exponent exactly (n-1)^2 + 1.
    const Eigen::Index n = 6;
    Matrix wl = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) wl(i, i + 1) = 1;
    wl(n - 1, 0) = 1;
    wl(n - 1, 1) = 1;
    CHECK(is_primitive(wl));
    Matrix cycle = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) cycle(i, (i + 1) % n) = 1;
    CHECK_FALSE(is_primitive(cycle));
}

TEST_CASE("spectral data of small closed-form matrices") {
    SECTION("rank-one consensus matrix") {
        const auto s = compute_spectral(metropolis_weights(path_graph(2)));
        CHECK(s.perron(0) == Approx(0.5).margin(1e-12));
        CHECK(s.perron(1) == Approx(0.5).margin(1e-12));
        CHECK(s.sigma_max == Approx(0.0).margin(1e-12));
    }
    SECTION("three-node star") {
        // det(W - x I) for W = [[1/3,1/3,1/3],[1/3,2/3,0],[1/3,0,2/3]]
        // factors as -(x - 1)(x - 2/3)x, so the second largest |eigenvalue| is 2/3.
        const auto wn = metropolis_weights(star_graph(3));
        auto charpoly = [&](double x) { return (wn.W() - x * Matrix::Identity(3, 3)).determinant(); };
        const double roots[] = {1.0, 2.0 / 3.0, 0.0};
        for (double r : roots) CHECK(std::abs(charpoly(r)) < 1e-14);
        const auto s = compute_spectral(wn);
        CHECK(s.sigma_max == Approx(2.0 / 3.0).margin(1e-10));
        CHECK(s.rayleigh == Approx(2.0 / 3.0).margin(1e-10));
    }
}

TEST_CASE("spectral data agrees with a dense SVD") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const auto net = testing::connected_er(16, 0.2, seed * 7);
        for (const auto& wn : {metropolis_weights(net), lazy_metropolis_weights(net), row_stochastic_weights(net, seed)}) {
            const auto s = compute_spectral(wn);
            const Matrix& w = wn.W();
            const auto n = w.rows();
            CHECK((w.transpose() * s.perron - s.perron).lpNorm<Eigen::Infinity>() < 1e-10);
            CHECK(s.perron.minCoeff() > 0.0);
            CHECK(s.perron.sum() == Approx(1.0).margin(1e-12));
            if (wn.doubly_stochastic()) CHECK((s.perron.array() - 1.0 / static_cast<double>(n)).abs().maxCoeff() < 1e-10);

            // Oracle Perron vector: null space of W^T - I via full-pivot LU.
            Eigen::FullPivLU<Matrix> lu(w.transpose() - Matrix::Identity(n, n));
            Vector v_ref = lu.kernel().col(0);
            v_ref /= v_ref.sum();
            CHECK((v_ref - s.perron).lpNorm<Eigen::Infinity>() < 1e-9);

            const Matrix m = w - Vector::Ones(n) * v_ref.transpose();
            Eigen::JacobiSVD<Matrix> svd(m);
            CHECK(s.sigma_max == Approx(svd.singularValues()(0)).margin(1e-9));
            // The deflated norm can exceed 1 for row-stochastic W.
            if (wn.doubly_stochastic()) CHECK(s.sigma_max < 1.0 - 1e-12);
            CHECK(std::abs(s.v2.sum()) < 1e-10);
            CHECK(s.v2.norm() == Approx(1.0).margin(1e-12));
        }
    }
}
