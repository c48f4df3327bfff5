#ifndef SBPC_RNG_HPP
#define SBPC_RNG_HPP

#include <cmath>
#include <cstdint>

namespace sbpc {

// Deterministic, platform-independent generators. std:: distributions are
// implementation-defined, so all sampling goes through these.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& w : state_)
            w = splitmix64(s);
    }

    // Derives an independent stream; used for per-index seeding in parallel code.
    static Rng stream(std::uint64_t seed, std::uint64_t index) {
        std::uint64_t s = seed;
        std::uint64_t a = splitmix64(s);
        s = a ^ (index * 0xd1342543de82ef95ull + 0x2545f4914f6cdd1dull);
        return Rng(splitmix64(s));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on [0,1).
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on {0,...,bound-1}.
    std::uint64_t next_below(std::uint64_t bound) {
        // Bounded rejection keeps the distribution exact.
        std::uint64_t threshold = (-bound) % bound;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold)
                return r % bound;
        }
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    double normal() {
        // Box-Muller, one value per call.
        for (;;) {
            double u = next_double();
            double v = next_double();
            if (u <= 0.0)
                continue;
            return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586476925286766559 * v);
        }
    }

    // Exact Poisson sampling. Knuth's product method for small rates; larger
    // rates split additively to avoid underflow of exp(-rate).
    long poisson(double rate) {
        if (rate <= 0.0)
            return 0;
        if (rate > 30.0) {
            double half = rate / 2.0;
            return poisson(half) + poisson(rate - half);
        }
        const double limit = std::exp(-rate);
        long k = 0;
        double prod = next_double();
        while (prod > limit) {
            ++k;
            prod *= next_double();
        }
        return k;
    }

    // Marsaglia-Tsang for shape >= 1, boosted below 1. Scale multiplies.
    double gamma(double shape, double scale) {
        if (shape < 1.0) {
            double u = next_double();
            while (u <= 0.0)
                u = next_double();
            return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0)
                continue;
            v = v * v * v;
            double u = next_double();
            if (u < 1.0 - 0.0331 * x * x * x * x)
                return d * v * scale;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
                return d * v * scale;
        }
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
};

}  // namespace sbpc

#endif
