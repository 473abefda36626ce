#pragma once

#include <cstdint>
#include <random>

namespace fjdc {

// Seeded source of doubles in [0, 1) that is bit-reproducible across standard
// libraries: std::mt19937_64 is fully specified, and the conversion to double
// takes the top 53 bits instead of going through std::uniform_real_distribution
// (whose algorithm is implementation-defined).
class UniformSource {
public:
    explicit UniformSource(std::uint64_t seed) : engine_(seed) {}

    double operator()() {
        ++draws_;
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Value in (0, 1]; used where a strictly positive draw is required.
    double positive() { return 1.0 - (*this)(); }

    std::uint64_t draws() const noexcept { return draws_; }

private:
    std::mt19937_64 engine_;
    std::uint64_t draws_ = 0;
};

// Independent streams derived from one user seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace fjdc
