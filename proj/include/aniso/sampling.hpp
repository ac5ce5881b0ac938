#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "aniso/linalg.hpp"

namespace aniso {

/// Deterministic directions on the Euclidean unit sphere of R^n.
/// For n = 2 these are the half-offset angles (j + 1/2) 2π/m, which never
/// land exactly on a coordinate axis.
inline std::vector<Vec> sphere_directions(int n, int m, std::uint64_t seed = 0) {
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(m));
    if (n == 2) {
        for (int j = 0; j < m; ++j) out.push_back(unit_direction((j + 0.5) * 2.0 * pi / m));
        return out;
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    while (static_cast<int>(out.size()) < m) {
        Vec d(n);
        for (int i = 0; i < n; ++i) d(i) = normal(rng);
        const double len = d.norm();
        if (len > 1e-12) out.push_back(d / len);
    }
    return out;
}

/// Random nonzero vector with log-uniform length in [r_min, r_max] and
/// uniformly distributed direction.
class GradientSampler {
public:
    GradientSampler(int dim, std::uint64_t seed, double r_min = 1e-4, double r_max = 1e2)
        : dim_(dim), rng_(seed), log_r_(std::log(r_min), std::log(r_max)) {}

    Vec next() {
        const double r = std::exp(log_r_(rng_));
        return r * direction();
    }

    Vec direction() {
        if (dim_ == 2) return unit_direction(angle_(rng_));
        Vec d(dim_);
        double len = 0.0;
        do {
            for (int i = 0; i < dim_; ++i) d(i) = normal_(rng_);
            len = d.norm();
        } while (len < 1e-12);
        return d / len;
    }

private:
    int dim_;
    std::mt19937_64 rng_;
    std::uniform_real_distribution<double> log_r_;
    std::uniform_real_distribution<double> angle_{0.0, 2.0 * pi};
    std::normal_distribution<double> normal_;
};

/// (ξ, v) pairs for the structural bound checks: ξ log-uniform in length, v a unit vector.
inline std::vector<std::pair<Vec, Vec>> sample_vector_pairs(int dim, int count, std::uint64_t seed) {
    GradientSampler sampler(dim, seed);
    std::vector<std::pair<Vec, Vec>> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        Vec xi = sampler.next();
        Vec v = sampler.direction();
        out.emplace_back(std::move(xi), std::move(v));
    }
    return out;
}

/// (x, y) pairs with both entries log-uniform in length; used for the
/// flux monotonicity check.
inline std::vector<std::pair<Vec, Vec>> sample_point_pairs(int dim, int count, std::uint64_t seed) {
    GradientSampler sampler(dim, seed);
    std::vector<std::pair<Vec, Vec>> out;
    out.reserve(static_cast<std::size_t>(count));
    while (static_cast<int>(out.size()) < count) {
        Vec x = sampler.next();
        Vec y = sampler.next();
        if ((x - y).norm() > 0.0) out.emplace_back(std::move(x), std::move(y));
    }
    return out;
}

inline std::vector<Vec> sample_vectors(int dim, int count, std::uint64_t seed) {
    GradientSampler sampler(dim, seed);
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(sampler.next());
    return out;
}

/// Radical inverse in the given base (van der Corput); the building block
/// of the Halton sequence.
inline double radical_inverse(std::uint64_t index, std::uint64_t base) {
    double result = 0.0;
    double f = 1.0 / static_cast<double>(base);
    while (index > 0) {
        result += f * static_cast<double>(index % base);
        index /= base;
        f /= static_cast<double>(base);
    }
    return result;
}

}  // namespace aniso
