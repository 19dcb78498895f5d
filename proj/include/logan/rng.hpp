// Seedable random generator with a fully specified output mapping.
//
// std::uniform_real_distribution and friends are implementation-defined, so
// every transform here is written out explicitly: two runs with the same seed
// produce the same stream on any conforming platform. The core engine is
// std::mt19937_64, whose output sequence is fixed by the standard.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace logan {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1): top 53 bits scaled by 2^-53.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform on [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Unbiased-enough integer in [0, n) via 128-bit multiply-shift.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Box-Muller with cached spare; consumes two uniforms per pair.
    double normal(double mean, double sigma) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + sigma * spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        // 1 - u1 keeps the log argument in (0, 1].
        double r = std::sqrt(-2.0 * std::log(1.0 - u1));
        double theta = 6.283185307179586477 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return mean + sigma * r * std::cos(theta);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace logan
