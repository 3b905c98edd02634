#pragma once

#include <cmath>
#include <stdexcept>

#include "layercomp/idx.hpp"
#include "layercomp/rng.hpp"

namespace layercomp {

// Expands a small base image set into a larger one by random affine jitter
// (rotation, isotropic scale, shift) with bilinear resampling onto a larger
// canvas. Used to synthesize a 28x28 handwritten-digit workload from the
// bundled 8x8 set when no full-size corpus is on disk.
struct AugmentParams {
    std::size_t count = 60000;
    std::uint64_t seed = 1;
    double max_rotation_deg = 12.0;
    double scale_jitter = 0.10;
    double max_shift = 2.5;
    double intensity_lo = 1.0;  // per-sample brightness factor range
    double intensity_hi = 1.0;
    double pixel_noise = 0.0;   // per-pixel uniform noise amplitude
    std::size_t out_rows = 28;
    std::size_t out_cols = 28;
    double base_box = 20.0;  // the base image maps onto this many pixels
};

inline Dataset augment_digits(const Dataset& base, const AugmentParams& p) {
    if (base.n() == 0) throw std::invalid_argument("augment: empty base set");
    Dataset out;
    out.rows = p.out_rows;
    out.cols = p.out_cols;
    out.pixels.resize(p.count * p.out_rows * p.out_cols);
    out.labels.resize(p.count);
    out.digits.resize(p.count);

    Rng rng(p.seed);
    const double base_scale = p.base_box / static_cast<double>(base.rows);
    const double cy = static_cast<double>(p.out_rows) / 2.0;
    const double cx = static_cast<double>(p.out_cols) / 2.0;
    const auto brows = static_cast<std::ptrdiff_t>(base.rows);
    const auto bcols = static_cast<std::ptrdiff_t>(base.cols);

    for (std::size_t s = 0; s < p.count; ++s) {
        const std::size_t b = rng.below(base.n());
        const double theta = rng.uniform(-p.max_rotation_deg, p.max_rotation_deg) *
                             (std::acos(-1.0) / 180.0);
        const double scale =
            base_scale * (1.0 + rng.uniform(-p.scale_jitter, p.scale_jitter));
        const double dx = rng.uniform(-p.max_shift, p.max_shift);
        const double dy = rng.uniform(-p.max_shift, p.max_shift);
        const double gain = rng.uniform(p.intensity_lo, p.intensity_hi);
        const double ct = std::cos(theta);
        const double st = std::sin(theta);
        const auto src = base.sample(b);

        float* dst = out.pixels.data() + s * out.features();
        for (std::size_t yy = 0; yy < p.out_rows; ++yy) {
            for (std::size_t xx = 0; xx < p.out_cols; ++xx) {
                const double ox = (static_cast<double>(xx) + 0.5) - cx - dx;
                const double oy = (static_cast<double>(yy) + 0.5) - cy - dy;
                // Inverse rotation, then unscale into base coordinates.
                const double u = (ct * ox + st * oy) / scale;
                const double v = (-st * ox + ct * oy) / scale;
                const double px = u + static_cast<double>(base.cols) / 2.0 - 0.5;
                const double py = v + static_cast<double>(base.rows) / 2.0 - 0.5;

                const auto x0 = static_cast<std::ptrdiff_t>(std::floor(px));
                const auto y0 = static_cast<std::ptrdiff_t>(std::floor(py));
                const double fx = px - static_cast<double>(x0);
                const double fy = py - static_cast<double>(y0);
                auto at = [&](std::ptrdiff_t yi, std::ptrdiff_t xi) -> double {
                    if (yi < 0 || yi >= brows || xi < 0 || xi >= bcols) return 0.0;
                    return src[static_cast<std::size_t>(yi * bcols + xi)];
                };
                double val = at(y0, x0) * (1 - fx) * (1 - fy) +
                             at(y0, x0 + 1) * fx * (1 - fy) +
                             at(y0 + 1, x0) * (1 - fx) * fy +
                             at(y0 + 1, x0 + 1) * fx * fy;
                val *= gain;
                if (p.pixel_noise > 0.0) {
                    val += rng.uniform(-p.pixel_noise, p.pixel_noise);
                }
                if (val < 0.0) val = 0.0;
                if (val > 1.0) val = 1.0;
                // Snap to the byte grid so saving and reloading is lossless.
                dst[yy * p.out_cols + xx] =
                    static_cast<float>(std::round(val * 255.0)) / 255.0f;
            }
        }
        out.labels[s] = base.labels[b];
        out.digits[s] = base.digits[b];
    }
    return out;
}

// Deterministic base split: every k-th sample held out.
inline std::pair<Dataset, Dataset> split_every_kth(const Dataset& ds, std::size_t k) {
    Dataset train, test;
    train.rows = test.rows = ds.rows;
    train.cols = test.cols = ds.cols;
    for (std::size_t i = 0; i < ds.n(); ++i) {
        Dataset& dst = (i % k == 0) ? test : train;
        const auto s = ds.sample(i);
        dst.pixels.insert(dst.pixels.end(), s.begin(), s.end());
        dst.labels.push_back(ds.labels[i]);
        dst.digits.push_back(ds.digits[i]);
    }
    return {std::move(train), std::move(test)};
}

}  // namespace layercomp
