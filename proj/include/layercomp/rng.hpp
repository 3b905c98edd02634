#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace layercomp {

// Seeded PRNG with hand-rolled variate transforms. The mt19937_64 engine
// sequence is pinned by the standard; the distribution helpers below avoid
// std::*_distribution so a given seed produces the same stream on every
// standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Exponential with the given mean.
    double exponential(double mean) {
        return -mean * std::log1p(-uniform());
    }

    // Uniform integer in [0, n). Lemire's multiply-shift; slight modulo
    // bias is below 2^-53 for the ranges used here.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(gen_()) * n) >> 64);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace layercomp
