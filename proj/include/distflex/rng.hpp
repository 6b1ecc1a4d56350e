#pragma once

#include <cmath>
#include <cstdint>

namespace distflex {

/// xoshiro256++ with splitmix64 seeding. Self-contained so that streams are
/// bit-identical across platforms and standard library versions (the std::
/// distributions are implementation-defined, which would break byte-exact
/// reproducibility guarantees).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : s_) word = splitmix64(x);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n) {
        // Lemire-style rejection-free enough for simulation purposes; the tiny
        // modulo bias at n << 2^64 is irrelevant here, determinism is not.
        return next() % n;
    }

    std::int64_t range(std::int64_t lo, std::int64_t hi) {  // inclusive bounds
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    double normal() {
        // Box-Muller; uses two draws per call, no cached spare (keeps the
        // stream position a pure function of call count).
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double lognormal(double log_median, double sigma) {
        return std::exp(log_median + sigma * normal());
    }

    /// Derive an independent stream (e.g. one per worker or bootstrap sample).
    Rng fork(std::uint64_t salt) {
        std::uint64_t x = next() ^ (salt * 0x9e3779b97f4a7c15ULL);
        return Rng(splitmix64(x));
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t s_[4];
};

}  // namespace distflex
