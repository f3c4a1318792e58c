#ifndef CATQKD_RNG_H
#define CATQKD_RNG_H

#include <cstdint>
#include <random>

namespace catqkd {

/// Seedable generator passed explicitly to every stochastic operation.
///
/// Wraps std::mt19937_64 and derives bits, integers and doubles from the raw
/// 64-bit output directly, so a given seed yields the same stream on every
/// standard library (the std::*_distribution types are not portable).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {
    }

    std::uint64_t next_u64() {
        return engine_();
    }
    std::uint8_t bit() {
        return static_cast<std::uint8_t>(engine_() >> 63);
    }
    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }
    bool bernoulli(double p) {
        return uniform() < p;
    }
    /// Uniform integer in [0, bound). bound must be nonzero.
    std::uint64_t below(std::uint64_t bound);

  private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer applied to (master, stream). Used to give each
/// Monte Carlo session its own generator keyed by session index.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace catqkd

#endif
