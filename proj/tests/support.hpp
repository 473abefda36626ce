#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fjdc/graph.hpp"
#include "fjdc/random.hpp"

namespace fjdc::testing {

// First connected ER(n, p) graph at seed, seed + 1, ...
inline Network connected_er(std::size_t n, double p, std::uint64_t seed) {
    for (std::uint64_t s = seed;; ++s) {
        auto net = generate_erdos_renyi(n, p, s);
        if (net.connected()) return net;
    }
}

inline Vector uniform_vector(std::size_t n, double lo, double hi, std::uint64_t seed) {
    UniformSource u(seed);
    Vector x(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = lo + (hi - lo) * u();
    return x;
}

struct NamedFixture {
    std::string name;
    WeightedNetwork wn;
};

// Five small primitive fixtures covering every weight builder.
inline std::vector<NamedFixture> small_fixtures() {
    std::vector<NamedFixture> out;
    out.push_back({"path5-metropolis", ensure_spectral(metropolis_weights(path_graph(5)))});
    out.push_back({"star6-lazy", ensure_spectral(lazy_metropolis_weights(star_graph(6)))});
    out.push_back({"complete4-metropolis", ensure_spectral(metropolis_weights(complete_graph(4)))});
    out.push_back({"er20-metropolis", ensure_spectral(metropolis_weights(connected_er(20, 0.2, 11)))});
    out.push_back({"er12-row-stochastic", ensure_spectral(row_stochastic_weights(connected_er(12, 0.3, 5), 9))});
    return out;
}

}  // namespace fjdc::testing
