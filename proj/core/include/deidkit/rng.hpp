#pragma once

#include <cstdint>
#include <vector>

namespace deidkit {

/// splitmix64 mixing step. Used both as a generator state transition and to
/// derive independent stream seeds from a root seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derive the seed for sub-stream `stream` of a root seed. Independent of
/// execution order, so parallel consumers stay reproducible.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
    return splitmix64(root ^ (0xa24baed4963ee407ULL * (stream + 1)));
}

/// Deterministic random source. Every distribution is implemented locally so
/// that sequences are identical across standard libraries; std::shuffle and
/// std::normal_distribution make no such guarantee.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Rejection sampling keeps it exact.
    std::uint64_t uniform_below(std::uint64_t n);

    /// Standard normal (Marsaglia polar method).
    double normal();

    /// Normal(0, stddev) resampled until within `bound_stddevs` deviations.
    double truncated_normal(double stddev, double bound_stddevs = 2.0);

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

  private:
    std::uint64_t state_;
    double spare_normal_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace deidkit
