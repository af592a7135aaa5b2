#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "metahunt/errors.hpp"

namespace metahunt {

/// Splittable seeded generator: xoshiro256++ state derived from a 64-bit
/// root via splitmix64. split(a, b) derives an independent stream from the
/// root alone, so per-study / per-run streams are reproducible no matter
/// in which order (or on which thread) they are consumed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : root_(seed) {
        std::uint64_t sm = seed;
        for (auto& si : s_) si = splitmix64(sm);
    }

    Rng split(std::uint64_t a, std::uint64_t b = 0) const {
        std::uint64_t h = root_;
        h = mix(h ^ (0x9e3779b97f4a7c15ull + a));
        h = mix(h ^ (0xd1b54a32d192ed03ull + b));
        return Rng(h);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Box-Muller; two uniforms per draw, no cached spare, so the stream
    /// position is a pure function of the call count.
    double normal(double mean = 0.0, double sd = 1.0) {
        double u1 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        const double u2 = uniform();
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
        return mean + sd * z;
    }

    /// Marsaglia-Tsang for shape >= 1; boost by u^{1/shape} below 1.
    double gamma(double shape) {
        if (!(shape > 0.0)) throw ArgumentError("Rng::gamma: shape must be positive");
        if (shape < 1.0) {
            const double u = std::max(uniform(), 1e-300);
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 1e-300 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    /// Gamma-ratio construction; renormalized so the output sums to 1 exactly
    /// up to one final division.
    std::vector<double> dirichlet(const std::vector<double>& alpha) {
        if (alpha.empty()) throw ArgumentError("Rng::dirichlet: empty alpha");
        std::vector<double> g(alpha.size());
        double sum = 0.0;
        for (std::size_t k = 0; k < alpha.size(); ++k) {
            if (!(alpha[k] > 0.0)) throw ArgumentError("Rng::dirichlet: alpha must be positive");
            g[k] = gamma(alpha[k]);
            sum += g[k];
        }
        if (sum <= 0.0) {
            // all gammas underflowed; fall back to the argmax vertex
            std::size_t best = 0;
            for (std::size_t k = 1; k < alpha.size(); ++k)
                if (alpha[k] > alpha[best]) best = k;
            std::vector<double> w(alpha.size(), 0.0);
            w[best] = 1.0;
            return w;
        }
        for (auto& x : g) x /= sum;
        return g;
    }

    std::uint64_t root() const { return root_; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static std::uint64_t splitmix64(std::uint64_t& state) {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t root_;
    std::uint64_t s_[4];
};

/// Fisher-Yates permutation of 0..n-1.
inline std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = std::size_t(rng.next_u64() % i);
        std::swap(p[i - 1], p[j]);
    }
    return p;
}

} // namespace metahunt
