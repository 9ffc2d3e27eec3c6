#include "mlti/rng.hpp"

#include <cmath>
#include <numbers>

namespace mlti {

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
}

std::uint64_t Rng::integer(std::uint64_t bound) {
    if (bound == 0) return 0;
    const std::uint64_t reject_above = std::uint64_t(-1) - std::uint64_t(-1) % bound;
    std::uint64_t v = 0;
    do {
        v = gen_();
    } while (v >= reject_above);
    return v % bound;
}

} // namespace mlti
