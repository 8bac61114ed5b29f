#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace dtrti {

/// splitmix64 finalizer; used to hash seed-path components into stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives the seed for an independent substream from a master seed and an
/// index path, e.g. derive_seed(master, {grid_index, replicate, purpose}).
/// Pure function of its arguments, so substreams can be created in any order
/// from any thread.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = mix64(master);
    for (std::uint64_t idx : path) {
        h = mix64(h ^ mix64(idx + 0x632be59bd9b4e019ULL));
    }
    return h;
}

/// Random stream wrapping mt19937_64 with the handful of draw types the
/// simulators need. Distribution algorithms are fixed here (not delegated to
/// std:: distributions) so that a seed produces the same sequence on every
/// standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on (0,1); never returns 0 or 1.
    double uniform01() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1p-53;
    }

    /// Standard normal via Box-Muller; caches the second variate.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Standard Student t with 3 degrees of freedom (variance 3).
    double student_t3() {
        const double z = normal();
        double g = 0.0;
        for (int i = 0; i < 3; ++i) {
            const double n = normal();
            g += n * n;
        }
        return z / std::sqrt(g / 3.0);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace dtrti
