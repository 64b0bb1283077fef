#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>

namespace covqa {

// Seeded generator with fully specified output. All stochastic choices in
// the library (init, data generation, shuffling, sampling) go through this
// class so that a seed pins every downstream byte, independent of the
// standard library's distribution implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform in [0, n). Modulo bias is ~2^-53 for the n used here.
    std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller; the second value of the pair is
    // discarded to keep the draw count a pure function of call count.
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // Fisher-Yates; deterministic unlike std::shuffle.
    template <typename It>
    void shuffle(It begin, It end) {
        const auto n = static_cast<std::uint64_t>(end - begin);
        for (std::uint64_t i = n; i > 1; --i) {
            const std::uint64_t j = uniform_int(i);
            std::swap(begin[i - 1], begin[j]);
        }
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace covqa
