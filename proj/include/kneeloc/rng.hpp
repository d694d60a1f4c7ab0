#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace kneeloc {

/// Small deterministic generator (splitmix64). Used wherever reproducible
/// streams are required; behaves identically on every platform, unlike the
/// distribution adaptors in <random>.
struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed = 0) : state(seed) {}

    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, n).
    std::uint64_t below(std::uint64_t n) { return next() % n; }

    /// Uniform in [0, 1).
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller.
    double gaussian() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    /// Derive an independent stream for a keyed sub-task.
    Rng fork(std::uint64_t key) {
        Rng r(state ^ (0xA24BAED4963EE407ull * (key + 1)));
        r.next();
        return r;
    }
};

/// Deterministic Fisher-Yates shuffle of [0, n) index arrays.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[rng.below(i)]);
}

} // namespace kneeloc
