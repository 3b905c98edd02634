#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "layercomp/csv.hpp"
#include "layercomp/matrix.hpp"

namespace layercomp {

// Strictly descending bit positions [P_0, ..., P_d] slicing a number into
// d bit-plane components: component i holds the bits at positions
// [P_i, P_{i-1}).
class PartitioningVector {
public:
    explicit PartitioningVector(std::vector<int> exponents)
        : exps_(std::move(exponents)) {
        if (exps_.size() < 2) {
            throw std::invalid_argument(
                "invalid partitioning: need at least two exponents");
        }
        for (std::size_t i = 1; i < exps_.size(); ++i) {
            if (exps_[i] >= exps_[i - 1]) {
                throw std::invalid_argument(
                    "invalid partitioning: exponents must be strictly descending");
            }
        }
        if (span_bits() > 62) {
            throw std::invalid_argument(
                "invalid partitioning: span exceeds 62 bits");
        }
    }

    static PartitioningVector parse(const std::string& csv) {
        std::vector<int> exps;
        for (const auto& cell : split(csv, ',')) {
            exps.push_back(static_cast<int>(std::stol(cell)));
        }
        return PartitioningVector(std::move(exps));
    }

    int depth() const { return static_cast<int>(exps_.size()) - 1; }  // d
    int exponent(int i) const { return exps_.at(static_cast<std::size_t>(i)); }
    int p0() const { return exps_.front(); }
    int pd() const { return exps_.back(); }
    int span_bits() const { return p0() - pd(); }
    std::span<const int> exponents() const { return exps_; }

    std::string to_string() const {
        std::string s;
        for (std::size_t i = 0; i < exps_.size(); ++i) {
            if (i) s += ',';
            s += std::to_string(exps_[i]);
        }
        return s;
    }

    friend bool operator==(const PartitioningVector& a,
                           const PartitioningVector& b) {
        return a.exps_ == b.exps_;
    }

private:
    std::vector<int> exps_;
};

// A real matrix decomposed into d signed integer bit-plane components with
// scale exponents P_1..P_d. Element signs are folded into the components.
struct LayeredMatrix {
    PartitioningVector pv;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<MatI> components;  // d matrices

    int depth() const { return pv.depth(); }

    // Sum of the first `upto` components at their scales. With upto == d the
    // result differs from the partitioned input by less than 2^{P_d}
    // elementwise.
    MatD reconstruct(int upto) const {
        if (upto < 1 || upto > depth()) {
            throw std::out_of_range("reconstruct: component count out of range");
        }
        MatD out(rows, cols, 0.0);
        for (int i = 0; i < upto; ++i) {
            const double scale = std::ldexp(1.0, pv.exponent(i + 1));
            for (std::size_t k = 0; k < out.data().size(); ++k) {
                out.data()[k] += static_cast<double>(components[i].data()[k]) * scale;
            }
        }
        return out;
    }

    MatD reconstruct() const { return reconstruct(depth()); }
};

namespace detail {

// Bits of |x| at positions >= pd, as an integer. Exact: scaling a finite
// double by a power of two only shifts its exponent.
inline std::uint64_t bit_slice_base(double x, int pd) {
    return static_cast<std::uint64_t>(std::floor(std::ldexp(std::fabs(x), -pd)));
}

}  // namespace detail

// Bit-plane decomposition of a matrix. Requires every |element| < 2^{P_0};
// rejects negative zero (sign of a zero slice is meaningless).
inline LayeredMatrix partition(const MatD& a, const PartitioningVector& pv) {
    const int d = pv.depth();
    const int pd = pv.pd();
    const double limit = std::ldexp(1.0, pv.p0());

    LayeredMatrix lm{pv, a.rows(), a.cols(), {}};
    lm.components.assign(static_cast<std::size_t>(d), MatI(a.rows(), a.cols(), 0));

    for (std::size_t k = 0; k < a.data().size(); ++k) {
        const double x = a.data()[k];
        if (!(std::fabs(x) < limit)) {
            throw std::invalid_argument(
                "element too large: |" + format_number(x) + "| >= 2^" +
                std::to_string(pv.p0()));
        }
        if (x == 0.0) {
            if (std::signbit(x)) {
                throw std::invalid_argument("element is negative zero");
            }
            continue;
        }
        const std::uint64_t t = detail::bit_slice_base(x, pd);
        const std::int64_t sign = x < 0.0 ? -1 : 1;
        for (int i = 1; i <= d; ++i) {
            const int lo = pv.exponent(i) - pd;
            const int width = pv.exponent(i - 1) - pv.exponent(i);
            const std::uint64_t mask = (std::uint64_t{1} << width) - 1;
            const auto piece = static_cast<std::int64_t>((t >> lo) & mask);
            lm.components[static_cast<std::size_t>(i - 1)].data()[k] = sign * piece;
        }
    }
    return lm;
}

inline LayeredMatrix partition(std::span<const double> x,
                               const PartitioningVector& pv) {
    MatD m(x.size(), 1);
    for (std::size_t i = 0; i < x.size(); ++i) m(i, 0) = x[i];
    return partition(m, pv);
}

inline LayeredMatrix partition(double x, const PartitioningVector& pv) {
    MatD m(1, 1);
    m(0, 0) = x;
    return partition(m, pv);
}

}  // namespace layercomp
