#include "deidkit/rng.hpp"

#include <cmath>

namespace deidkit {

std::uint64_t Rng::uniform_below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t r = next_u64();
        if (r >= threshold) return r % n;
    }
}

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_normal_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_normal_ = v * scale;
    have_spare_ = true;
    return u * scale;
}

double Rng::truncated_normal(double stddev, double bound_stddevs) {
    for (;;) {
        const double z = normal();
        if (std::abs(z) <= bound_stddevs) return z * stddev;
    }
}

}  // namespace deidkit
