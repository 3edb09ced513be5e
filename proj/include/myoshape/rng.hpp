#ifndef MYOSHAPE_RNG_HPP
#define MYOSHAPE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace myoshape {

/// mt19937_64-backed generator with hand-rolled distributions so that
/// sequences are identical across standard libraries. std::*_distribution is
/// implementation-defined; seed-reproducibility here must be bit-exact.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    /// Marsaglia polar method; consumes a variable but deterministic number
    /// of draws.
    double normal(double mean = 0.0, double sd = 1.0) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + sd * spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return mean + sd * u * f;
    }

    /// Derives an independent stream for a sub-task (e.g. one synthetic
    /// case) so per-case work can run in any order.
    static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace myoshape

#endif  // MYOSHAPE_RNG_HPP
