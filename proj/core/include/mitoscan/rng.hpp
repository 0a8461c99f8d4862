#pragma once

#include <cmath>
#include <cstdint>

namespace mitoscan {

/// SplitMix64 (Steele, Lea, Flood 2014). Chosen as the fixture RNG because
/// the algorithm is fully specified by these three lines, so ports in other
/// languages reproduce generated datasets bit-exactly from the same seed.
class SplitMix64 {
  public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53 mantissa bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi], inclusive.
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(next() % static_cast<uint64_t>(hi - lo + 1));
    }

    /// Standard normal via Box-Muller (no state caching between calls).
    double gaussian() {
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(1.0 - u1));
        return r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    uint64_t state() const { return state_; }

  private:
    uint64_t state_;
};

/// Derives an independent stream seed from a base seed and a stream tag.
inline uint64_t derive_seed(uint64_t seed, uint64_t tag) {
    SplitMix64 mix(seed ^ (tag * 0xd1342543de82ef95ull));
    return mix.next();
}

}  // namespace mitoscan
