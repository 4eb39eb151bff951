#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace epifit {

// Seeded random source with fixed sampling algorithms.
//
// The engine is std::mt19937_64 (its output sequence is pinned by the
// standard), but every distribution here is implemented by hand: the
// standard library's distribution objects are allowed to differ between
// implementations, and artifacts produced from a given seed must be
// byte-identical across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1): top 53 bits of the engine output.
    double uniform()
    {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Rejection-free modulo bias is avoided by
    // drawing 64 bits against the largest multiple of n that fits.
    std::uint64_t below(std::uint64_t n)
    {
        if (n == 0)
            return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    // Standard normal via Box-Muller. One value per call; the pair's second
    // member is cached so draw order stays reproducible.
    double normal()
    {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Poisson draw. Knuth's product method below mean 64; above that the
    // rounded normal approximation is used (relative error there is far
    // below the noise the draw itself injects).
    std::int64_t poisson(double mean)
    {
        if (mean <= 0.0)
            return 0;
        if (mean < 64.0) {
            const double limit = std::exp(-mean);
            std::int64_t k = 0;
            double p = 1.0;
            do {
                ++k;
                p *= uniform();
            } while (p > limit);
            return k - 1;
        }
        const double draw = std::round(normal(mean, std::sqrt(mean)));
        return draw < 0.0 ? 0 : static_cast<std::int64_t>(draw);
    }

    // Fisher-Yates; std::shuffle's draw pattern is implementation-defined.
    template <typename T>
    void shuffle(std::vector<T>& items)
    {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace epifit
