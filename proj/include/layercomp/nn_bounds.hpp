#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "layercomp/partition.hpp"

namespace layercomp {

// Inputs for the network-level precision and complexity-gap calculators.
// j_max bounds the Jacobian magnitude of the final map (0.25 for sigmoid),
// h_max / h_min bound the bit positions of the accumulated pre-activations.
// `layers` is explicit: it controls how many terms the products and sums
// range over.
struct NnBoundInputs {
    double j_max = 0.25;
    int h_max = 0;
    int h_min = 0;
    std::vector<std::size_t> widths;      // n_0 .. n_{L+1}
    PartitioningVector px{std::vector<int>{0, -1}};  // Q_0 .. Q_R
    std::vector<PartitioningVector> pw;   // one per weight layer
    std::size_t layers = 1;               // number of weight layers used

    void validate() const {
        if (!(j_max > 0)) throw std::invalid_argument("bounds: j_max must be > 0");
        if (h_max < h_min) throw std::invalid_argument("bounds: h_max < h_min");
        if (layers == 0 || layers >= widths.size()) {
            throw std::invalid_argument("bounds: bad layer count");
        }
        if (pw.size() < layers) {
            throw std::invalid_argument("bounds: missing partitioning vectors");
        }
        for (const auto& pv : pw) {
            if (pv.depth() != px.depth()) {
                throw std::invalid_argument("bounds: depth mismatch");
            }
        }
    }
};

// Output-error bound after resolution upgrade r:
//   2^{Q_r} * (J m prod_i 2^{P_0^{(i)}} n_i)
//   + sum_i 2^{P_r^{(i)}} * (J m 2^{h_max} n_i prod_{j>i} 2^{P_0^{(j)}} n_j).
// Non-increasing in r.
inline double nn_delta_bound(const NnBoundInputs& b, int r) {
    b.validate();
    if (r < 1 || r > b.px.depth()) {
        throw std::out_of_range("nn_delta_bound: resolution out of range");
    }
    const double m = static_cast<double>(b.widths.back());

    double lead = b.j_max * m;
    for (std::size_t i = 0; i < b.layers; ++i) {
        lead *= std::ldexp(static_cast<double>(b.widths[i]), b.pw[i].p0());
    }
    double total = std::ldexp(lead, b.px.exponent(r));

    for (std::size_t i = 0; i < b.layers; ++i) {
        double term = b.j_max * m * static_cast<double>(b.widths[i]);
        term = std::ldexp(term, b.h_max + b.pw[i].exponent(r));
        for (std::size_t j = i + 1; j < b.layers; ++j) {
            term *= std::ldexp(static_cast<double>(b.widths[j]), b.pw[j].p0());
        }
        total += term;
    }
    return total;
}

// Complexity saved by the r-th upgrade relative to one-shot evaluation,
// summed over layers with the weight-shape product n_{l+1} * n_l. Positive
// for the configurations of interest; degenerate depth-1 vectors can drive
// it negative, which callers report rather than assert away.
inline double nn_cost_gap(const NnBoundInputs& b, int r) {
    b.validate();
    const int big_r = b.px.depth();
    if (r < 1 || r > big_r) {
        throw std::out_of_range("nn_cost_gap: resolution out of range");
    }
    double total = 0.0;
    for (std::size_t l = 0; l < b.layers; ++l) {
        const auto& pv = b.pw[l];
        const double bracket = 0.5 * pv.exponent(0) - 1.5 * pv.exponent(r - 1) +
                               2.0 * pv.exponent(r) - pv.exponent(big_r);
        total += static_cast<double>(b.widths[l + 1]) *
                 static_cast<double>(b.widths[l]) *
                 static_cast<double>(b.h_max - b.h_min) * bracket;
    }
    return total;
}

}  // namespace layercomp
