#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "layercomp/matrix.hpp"
#include "layercomp/partition.hpp"
#include "layercomp/schedule.hpp"

namespace layercomp {

using int128 = __int128;

// Complexity convention: multiplying a u x v matrix of m-bit elements by a
// v-vector of n-bit elements costs u*v*m*n units; additions and bit shifts
// are free.
inline std::int64_t layered_cost(const PartitioningVector& pv_w,
                                 const PartitioningVector& pv_x, int r,
                                 std::size_t u, std::size_t v) {
    const auto sched = make_schedule(pv_w, pv_x);
    if (r < 1 || r > sched.size()) {
        throw std::out_of_range("layered_cost: resolution out of range");
    }
    const auto [i, j] = sched.order[static_cast<std::size_t>(r - 1)];
    const std::int64_t wbits = pv_w.exponent(i - 1) - pv_w.exponent(i);
    const std::int64_t xbits = pv_x.exponent(j - 1) - pv_x.exponent(j);
    return static_cast<std::int64_t>(u) * static_cast<std::int64_t>(v) * wbits * xbits;
}

inline std::int64_t one_shot_cost(const PartitioningVector& pv_w,
                                  const PartitioningVector& pv_x,
                                  std::size_t u, std::size_t v) {
    return static_cast<std::int64_t>(u) * static_cast<std::int64_t>(v) *
           pv_w.span_bits() * pv_x.span_bits();
}

// Elementwise bound on |WX - Omega_r| for an inner dimension n:
//   n * (delta + (R - r) * 2^{P_{gamma_r(1)} + Q_{gamma_r(2)}}),
//   delta = 2^{P_0+Q_d} + 2^{P_d+Q_0} + 2^{P_d+Q_d}.
// The n factor sums the scalar-style residual over a row; non-increasing in
// r. The tail term budgets one 2^{exponent-sum} unit per outstanding
// product, which holds when every slice is a single bit (unit-spaced
// vectors); wider slices can outgrow it before the final resolution. At
// r = R only the residual delta remains and the bound holds for any spacing.
inline double delta_bound(const PartitioningVector& pv_w,
                          const PartitioningVector& pv_x, int r,
                          std::size_t n) {
    const auto sched = make_schedule(pv_w, pv_x);
    if (r < 1 || r > sched.size()) {
        throw std::out_of_range("delta_bound: resolution out of range");
    }
    const double delta = std::ldexp(1.0, pv_w.p0() + pv_x.pd()) +
                         std::ldexp(1.0, pv_w.pd() + pv_x.p0()) +
                         std::ldexp(1.0, pv_w.pd() + pv_x.pd());
    const int remaining = sched.size() - r;
    const double tail =
        remaining * std::ldexp(1.0, sched.exponent_sums[static_cast<std::size_t>(r - 1)]);
    return static_cast<double>(n) * (delta + tail);
}

// W'=[W B], X'=[X; 1]; then W'X' = WX + B exactly.
inline std::pair<MatD, std::vector<double>> affine_extend(
    const MatD& w, std::span<const double> b, std::span<const double> x) {
    if (b.size() != w.rows() || x.size() != w.cols()) {
        throw std::invalid_argument("affine_extend: shape mismatch");
    }
    MatD wx(w.rows(), w.cols() + 1);
    for (std::size_t r = 0; r < w.rows(); ++r) {
        for (std::size_t c = 0; c < w.cols(); ++c) wx(r, c) = w(r, c);
        wx(r, w.cols()) = b[r];
    }
    std::vector<double> xx(x.begin(), x.end());
    xx.push_back(1.0);
    return {std::move(wx), std::move(xx)};
}

// One matrix-vector product held at successive resolutions. Omega
// accumulates as exact integers at the common scale 2^{P_d + Q_d}, so the
// final resolution can be compared bit-exactly against a one-shot product
// of the reconstructions.
class LayeredLinearJob {
public:
    LayeredLinearJob(const MatD& w, std::span<const double> x,
                     const PartitioningVector& pv_w,
                     const PartitioningVector& pv_x)
        : w_(partition(w, pv_w)),
          x_(partition(x, pv_x)),
          sched_(make_schedule(pv_w, pv_x)),
          omega_exp_(pv_w.pd() + pv_x.pd()),
          omega_scaled_(w.rows(), 0) {
        if (w.cols() != x.size()) {
            throw std::invalid_argument("layered job: shape mismatch");
        }
        // |omega_scaled| < n * 2^{span_w + span_x}; keep it inside 128 bits.
        int inner_bits = 0;
        for (std::size_t n = w.cols(); n > 0; n >>= 1) ++inner_bits;
        if (pv_w.span_bits() + pv_x.span_bits() + inner_bits > 126) {
            throw std::invalid_argument(
                "layered job: accumulator would exceed 128 bits");
        }
    }

    int resolution() const { return r_; }
    int total_resolutions() const { return sched_.size(); }
    bool complete() const { return r_ == sched_.size(); }
    const ResolutionSchedule& schedule() const { return sched_; }
    const LayeredMatrix& w_layers() const { return w_; }
    const LayeredMatrix& x_layers() const { return x_; }

    // One resolution upgrade: a single integer component product, shifted to
    // the common scale and accumulated.
    void upgrade() {
        if (complete()) {
            throw std::logic_error("upgrade: job already complete");
        }
        const auto [i, j] = sched_.order[static_cast<std::size_t>(r_)];
        const int shift = sched_.exponent_sums[static_cast<std::size_t>(r_)] - omega_exp_;
        const MatI& wc = w_.components[static_cast<std::size_t>(i - 1)];
        const MatI& xc = x_.components[static_cast<std::size_t>(j - 1)];
        for (std::size_t row = 0; row < wc.rows(); ++row) {
            int128 acc = 0;
            const auto wrow = wc.row(row);
            for (std::size_t col = 0; col < wc.cols(); ++col) {
                acc += static_cast<int128>(wrow[col]) * xc(col, 0);
            }
            omega_scaled_[row] += acc << shift;
        }
        ++r_;
    }

    const std::vector<int128>& omega_scaled() const { return omega_scaled_; }
    int omega_exponent() const { return omega_exp_; }

    std::vector<double> omega() const {
        std::vector<double> out(omega_scaled_.size());
        for (std::size_t k = 0; k < out.size(); ++k) {
            out[k] = std::ldexp(static_cast<double>(omega_scaled_[k]), omega_exp_);
        }
        return out;
    }

private:
    LayeredMatrix w_;
    LayeredMatrix x_;
    ResolutionSchedule sched_;
    int omega_exp_;
    std::vector<int128> omega_scaled_;
    int r_ = 0;
};

// Exact scaled-integer product of the two reconstructions; the oracle the
// final resolution must match bit for bit.
inline std::vector<int128> quantized_product_scaled(const LayeredMatrix& w,
                                                    const LayeredMatrix& x) {
    // Integer form of a layered matrix at scale 2^{pd}.
    auto to_scaled = [](const LayeredMatrix& lm) {
        Matrix<std::int64_t> out(lm.rows, lm.cols, 0);
        for (int i = 0; i < lm.depth(); ++i) {
            const int shift = lm.pv.exponent(i + 1) - lm.pv.pd();
            for (std::size_t k = 0; k < out.data().size(); ++k) {
                out.data()[k] += lm.components[static_cast<std::size_t>(i)].data()[k]
                                 << shift;
            }
        }
        return out;
    };
    const MatI wi = to_scaled(w);
    const MatI xi = to_scaled(x);
    std::vector<int128> out(w.rows, 0);
    for (std::size_t r = 0; r < w.rows; ++r) {
        int128 acc = 0;
        for (std::size_t c = 0; c < w.cols; ++c) {
            acc += static_cast<int128>(wi(r, c)) * xi(c, 0);
        }
        out[r] = acc;
    }
    return out;
}

}  // namespace layercomp
