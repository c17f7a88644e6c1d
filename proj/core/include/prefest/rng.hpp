#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace prefest {

/// Deterministic RNG stream addressed by (master seed, replication, subject).
/// Uniform, normal, gamma and beta variates are generated from mt19937_64
/// words directly so results are identical across standard libraries.
class RngStream {
public:
    explicit RngStream(std::uint64_t master_seed, std::uint64_t replication = 0,
                       std::uint64_t subject = 0) {
        std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                          static_cast<std::uint32_t>(master_seed >> 32),
                          static_cast<std::uint32_t>(replication),
                          static_cast<std::uint32_t>(replication >> 32),
                          static_cast<std::uint32_t>(subject),
                          static_cast<std::uint32_t>(subject >> 32)};
        eng_.seed(seq);
    }

    double uniform() {  // in [0, 1)
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double normal() {  // Box-Muller
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Marsaglia-Tsang, shape >= 1 (extended below 1 by the boost trick).
    double gamma(double shape) {
        if (shape < 1.0) {
            double u = 0.0;
            while (u <= 0.0) u = uniform();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        double d = shape - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double beta(double a, double b) {
        double x = gamma(a);
        double y = gamma(b);
        return x / (x + y);
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace prefest
