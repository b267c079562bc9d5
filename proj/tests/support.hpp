#pragma once

#include <cstdint>
#include <random>

#include "nsda/fields.hpp"

namespace nsda::testing {

// Uniform in [lo, hi) from raw mt19937_64 bits, so values do not depend on
// the standard library's distribution implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    double uniform(double lo = 0.0, double hi = 1.0) {
        return lo + (hi - lo) * static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }
    std::uint64_t bits() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

inline ScalarField random_field(GridSpec g, Rng& rng, double lo = -1.0, double hi = 1.0) {
    ScalarField f(g);
    for (double& v : f.values()) v = rng.uniform(lo, hi);
    return f;
}

inline ScalarField random_clean_field(GridSpec g, Rng& rng) {
    ScalarField f = random_field(g, rng);
    f.zero_boundary_ring();
    return f;
}

}  // namespace nsda::testing
