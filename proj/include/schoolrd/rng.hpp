#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace schoolrd {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed for replication `rep` of a run seeded with `seed`. Stable under any
// thread schedule: replication results are merged by index, never by
// completion order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t rep) {
    return splitmix64(seed ^ splitmix64(rep + 1));
}

// mt19937_64 bit stream with hand-rolled variate transforms. The std
// distributions are implementation-defined; these are not, so rosters are
// bit-identical for a given seed on any standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform01() {  // [0, 1)
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller; consumes exactly two uniforms per pair.
    double normal(double mean = 0.0, double sd = 1.0) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + sd * spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return mean + sd * (r * std::cos(a));
    }

    std::uint64_t bits() { return gen_(); }

    // index in [0, n)
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform01() * static_cast<double>(n)) % n;
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace schoolrd
