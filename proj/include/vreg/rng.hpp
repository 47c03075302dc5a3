#pragma once
// Seeded random number generation with portable output. The engine is
// std::mt19937_64 (bit-exact across platforms by the standard); the
// distributions are implemented here because the std:: ones are not
// required to produce identical streams everywhere.

#include <cmath>
#include <cstdint>
#include <random>

namespace vreg {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class Rng {
  public:
    explicit Rng(uint64_t seed) : eng_(splitmix64(seed)) {}

    // Independent stream derived from (seed, index). Used so that sample i
    // of a dataset does not depend on how many samples were drawn before it.
    static Rng child(uint64_t seed, uint64_t index) {
        return Rng(splitmix64(seed) ^ splitmix64(index * 0x9e3779b97f4a7c15ULL + 1));
    }

    uint64_t next() { return eng_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // [a, b)
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // [0, n)
    uint64_t uniform_int(uint64_t n) {
        // multiply-shift; bias is < 2^-64 per draw, irrelevant here
        return static_cast<uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    double normal() {
        // Box-Muller, one value per call (the pair's second half is dropped
        // to keep the stream position independent of call parity)
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

  private:
    std::mt19937_64 eng_;
};

}  // namespace vreg
