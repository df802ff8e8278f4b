#pragma once

#include <cstdint>

namespace sobex {

// splitmix64. Reports must be byte-identical for a fixed seed, so we do
// not use std:: distributions (their output is implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t next_below(std::uint64_t n) {
        // modulo bias is irrelevant at the sample counts used here
        return next_u64() % n;
    }

    /// Derive an independent stream for a named sub-experiment.
    Rng fork(std::uint64_t stream_id) const {
        return Rng(state_ ^ (0x6a09e667f3bcc909ull * (stream_id + 1)));
    }

private:
    std::uint64_t state_;
};

} // namespace sobex
