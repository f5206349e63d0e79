#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace egomd {

// mt19937_64 wrapper with a cache-free gaussian so the full stream state is
// exactly the engine state (required for bit-exact checkpoint resume).
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : gen_(seed) {}

    double uniform() {  // [0, 1)
        return std::generate_canonical<double, 53>(gen_);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Marsaglia polar method, second deviate discarded.
    double normal() {
        for (;;) {
            const double u = 2.0 * uniform() - 1.0;
            const double v = 2.0 * uniform() - 1.0;
            const double s = u * u + v * v;
            if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
        }
    }

    std::uint64_t integer() { return gen_(); }

    std::string save() const {
        std::ostringstream os;
        os << gen_;
        return os.str();
    }

    void restore(const std::string& s) {
        std::istringstream is(s);
        is >> gen_;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace egomd
