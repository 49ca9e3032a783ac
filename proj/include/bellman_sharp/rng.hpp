#pragma once

#include <cstdint>
#include <random>

namespace bellman_sharp {

/// Seeded generator with explicit uniform mappings, so runs are reproducible
/// byte-for-byte for a fixed seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform01() {  // in [0, 1)
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    int sign() { return (eng_() & 1u) ? 1 : -1; }

    std::uint64_t bits() { return eng_(); }

    /// integer in [0, n)
    std::uint64_t below(std::uint64_t n) { return eng_() % n; }

private:
    std::mt19937_64 eng_;
};

} // namespace bellman_sharp
