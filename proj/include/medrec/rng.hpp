#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace medrec {

// Deterministic RNG wrapper. All randomness in the project flows through
// this class; distributions are built from raw engine output so results do
// not depend on standard-library distribution internals.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t nextU64() { return engine_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    // Uniform integer in [0, n). Rejection sampling keeps the draw unbiased.
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    int intIn(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Derive an independent stream; used to decouple pipeline stages so that
    // adding draws in one stage does not shift another stage's sequence.
    Rng fork(std::uint64_t stream) {
        std::uint64_t base = 0x9e3779b97f4a7c15ULL * (stream + 1);
        return Rng(base ^ engine_());
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace medrec
