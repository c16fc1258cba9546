// Deterministic random streams. SplitMix64 underlies both direct draws and
// the counter-based seed derivation used by the Monte Carlo harness, so
// serial and parallel schedules agree bit-for-bit on any platform.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sfa {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // uniform in (0, 1)
    double uniform() {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    double half_normal(double sigma) { return std::fabs(sigma * normal()); }

    double lognormal(double mu, double sigma) { return std::exp(mu + sigma * normal()); }

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Counter-based derivation: stream r of a master seed. Independent of how
// many draws other streams consumed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
    SplitMix64 s(master ^ (0xA5A5A5A55A5A5A5AULL + counter * 0x9E3779B97F4A7C15ULL));
    return s.next();
}

} // namespace sfa
