#pragma once

#include <cmath>
#include <cstdint>

#include "fia/errors.hpp"

namespace fia {

// Counter-based deterministic generator. Each draw hashes (seed, counter)
// with the SplitMix64 finalizer, so a stream is a pure function of the seed:
// identical seeds give bit-identical streams regardless of process, thread
// count, or how many other generators exist. substream(i) derives an
// independent stream for worker i by folding i into the seed, which keeps
// parallel Monte Carlo reps reproducible and non-overlapping.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(mix(seed ^ 0x9e3779b97f4a7c15ull)) {}

    std::uint64_t next_u64() { return mix(seed_ + (++counter_) * 0x9e3779b97f4a7c15ull); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; draws two uniforms per call so the
    // stream advances deterministically (no cached spare).
    double normal() {
        const double u1 = 1.0 - uniform(); // (0, 1] keeps the log finite
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    // Integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    Rng substream(std::uint64_t id) const {
        return Rng(mix(seed_ ^ mix(id + 0x632be59bd9b4e019ull)));
    }

    std::uint64_t seed() const { return seed_; }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ull;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t seed_ = 0;
    std::uint64_t counter_ = 0;
};

} // namespace fia
