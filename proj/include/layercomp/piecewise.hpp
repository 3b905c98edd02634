#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace layercomp {

// Continuous piecewise-linear function on R. Region i covers
// [breakpoints[i-1], breakpoints[i]); a boundary point belongs to the region
// on its right. Slopes are capped at magnitude 1, which every activation
// handled here satisfies.
class PiecewiseLinear {
public:
    struct Segment {
        double slope;
        double intercept;
    };

    PiecewiseLinear(std::vector<double> breakpoints, std::vector<Segment> segments)
        : breaks_(std::move(breakpoints)), segs_(std::move(segments)) {
        if (segs_.size() != breaks_.size() + 1) {
            throw std::invalid_argument("piecewise: need one segment per region");
        }
        for (std::size_t i = 1; i < breaks_.size(); ++i) {
            if (!(breaks_[i - 1] < breaks_[i])) {
                throw std::invalid_argument("piecewise: breakpoints must ascend");
            }
        }
        for (const auto& s : segs_) {
            if (!(std::fabs(s.slope) <= 1.0 + 1e-12)) {
                throw std::invalid_argument("piecewise: |slope| must be <= 1");
            }
        }
        for (std::size_t i = 0; i < breaks_.size(); ++i) {
            const double b = breaks_[i];
            const double left = segs_[i].slope * b + segs_[i].intercept;
            const double right = segs_[i + 1].slope * b + segs_[i + 1].intercept;
            if (std::fabs(left - right) > 1e-9 * std::max(1.0, std::fabs(left))) {
                throw std::invalid_argument("piecewise: discontinuous at breakpoint");
            }
        }
    }

    std::size_t regions() const { return segs_.size(); }

    std::size_t region_of(double t) const {
        return static_cast<std::size_t>(
            std::upper_bound(breaks_.begin(), breaks_.end(), t) - breaks_.begin());
    }

    double operator()(double t) const {
        const auto& s = segs_[region_of(t)];
        return s.slope * t + s.intercept;
    }

    // The delta form sigma^t(dt) with sigma(t + dt) = sigma(t) + sigma^t(dt):
    // within one region it is rho_i * dt; across regions the region-change
    // correction appears.
    double delta(double t, double dt) const {
        const std::size_t j = region_of(t);
        const std::size_t i = region_of(t + dt);
        if (i == j) {
            return segs_[i].slope * dt;
        }
        return (segs_[i].slope - segs_[j].slope) * t + segs_[i].slope * dt +
               segs_[i].intercept - segs_[j].intercept;
    }

    static PiecewiseLinear identity() {
        return PiecewiseLinear({}, {{1.0, 0.0}});
    }

    static PiecewiseLinear relu() {
        return PiecewiseLinear({0.0}, {{0.0, 0.0}, {1.0, 0.0}});
    }

    static PiecewiseLinear leaky_relu(double negative_slope = 0.05) {
        return PiecewiseLinear({0.0}, {{negative_slope, 0.0}, {1.0, 0.0}});
    }

private:
    std::vector<double> breaks_;
    std::vector<Segment> segs_;
};

inline double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

namespace detail {

// Deviation scan of the chord over [lo, hi] against the true sigmoid;
// returns (worst |dev|, argmax).
inline std::pair<double, double> chord_deviation(double lo, double hi,
                                                 double vlo, double vhi) {
    const double slope = (vhi - vlo) / (hi - lo);
    double worst = 0.0;
    double arg = 0.5 * (lo + hi);
    constexpr int kSamples = 512;
    for (int k = 1; k < kSamples; ++k) {
        const double t = lo + (hi - lo) * k / kSamples;
        const double dev = std::fabs(sigmoid(t) - (vlo + slope * (t - lo)));
        if (dev > worst) {
            worst = dev;
            arg = t;
        }
    }
    return {worst, arg};
}

}  // namespace detail

// Continuous PLA of the sigmoid: constant 0 below -6, constant 1 above 6,
// and `num_segments` chords in between. Knots are placed greedily at the
// worst-deviation point, mirrored to keep the function symmetric about 0
// (so its value at 0 is 0.5). Even segment counts keep 0 as a knot; odd
// counts use a central segment straddling 0.
inline PiecewiseLinear make_sigmoid_pla(int num_segments) {
    if (num_segments < 3) {
        throw std::invalid_argument("sigmoid pla: need at least 3 segments");
    }
    const bool even = num_segments % 2 == 0;
    // Interior knots and their values; endpoints pinned to the saturation
    // levels so the tails attach continuously.
    std::vector<double> knots = even ? std::vector<double>{-6.0, 0.0, 6.0}
                                     : std::vector<double>{-6.0, 6.0};
    auto value_at = [](double t) {
        if (t == -6.0) return 0.0;
        if (t == 6.0) return 1.0;
        if (t == 0.0) return 0.5;
        // Mirror so that v(-t) + v(t) == 1 exactly.
        return t < 0.0 ? sigmoid(t) : 1.0 - sigmoid(-t);
    };
    while (static_cast<int>(knots.size()) - 1 < num_segments) {
        double worst = -1.0;
        double arg = 0.0;
        for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
            auto [dev, t] = detail::chord_deviation(
                knots[k], knots[k + 1], value_at(knots[k]), value_at(knots[k + 1]));
            if (dev > worst) {
                worst = dev;
                arg = t;
            }
        }
        const double t = std::fabs(arg) < 1e-12 ? 1.0 : std::fabs(arg);
        knots.push_back(-t);
        knots.push_back(t);
        std::sort(knots.begin(), knots.end());
        knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    }

    std::vector<double> breaks;
    std::vector<PiecewiseLinear::Segment> segs;
    segs.push_back({0.0, 0.0});  // t <= -6
    breaks.insert(breaks.end(), knots.begin(), knots.end());
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        const double lo = knots[k];
        const double hi = knots[k + 1];
        const double vlo = value_at(lo);
        const double slope = (value_at(hi) - vlo) / (hi - lo);
        segs.push_back({slope, vlo - slope * lo});
    }
    segs.push_back({0.0, 1.0});  // t >= 6
    return PiecewiseLinear(std::move(breaks), std::move(segs));
}

// Dense-grid worst-case deviation of a PLA against a reference function.
template <typename F>
double max_abs_deviation(const PiecewiseLinear& pla, F&& ref, double lo,
                         double hi, int samples = 20001) {
    double worst = 0.0;
    for (int k = 0; k <= samples; ++k) {
        const double t = lo + (hi - lo) * k / samples;
        worst = std::max(worst, std::fabs(pla(t) - ref(t)));
    }
    return worst;
}

}  // namespace layercomp
