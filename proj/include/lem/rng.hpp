#pragma once

#include <cstdint>
#include <stdexcept>

#include "lem/matrix.hpp"

namespace lem {

// Deterministic PRNG used for everything that needs randomness.
// SplitMix64 state march; doubles come from the top 53 bits, so streams are
// bit-identical across platforms and compilers for a given seed.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // in [0, 1)
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) {
        if (!(lo < hi)) throw std::invalid_argument("Rng::uniform: requires lo < hi");
        return lo + (hi - lo) * next_unit();
    }

    Vector uniform_vector(std::size_t n, double lo, double hi) {
        Vector v(n);
        for (auto& x : v) x = uniform(lo, hi);
        return v;
    }

    Matrix uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi) {
        Matrix m(rows, cols);
        for (auto& x : m.data) x = uniform(lo, hi);
        return m;
    }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_u64() % i);
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::uint64_t state_;
};

// Stateless seed derivation, so per-sample / per-epoch streams can be drawn
// independently of evaluation order (serial and chunked runs agree).
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
    std::uint64_t z = root ^ (0x9E3779B97F4A7C15ULL * (stream + 1));
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace lem
