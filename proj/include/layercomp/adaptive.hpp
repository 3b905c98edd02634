#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "layercomp/idx.hpp"
#include "layercomp/network.hpp"

namespace layercomp {

// Per-layer unit-spaced partitioning vectors sized from the weight
// magnitudes: P_0 is the smallest integer with max|W| < 2^{P_0}, then one
// extra bit per resolution upgrade.
inline std::vector<PartitioningVector> choose_partitioning(const MlpModel& model,
                                                           int resolutions) {
    std::vector<PartitioningVector> out;
    for (const auto& w : model.weights) {
        double peak = 0.0;
        for (double v : w.data()) peak = std::max(peak, std::fabs(v));
        if (peak == 0.0) {
            throw std::invalid_argument("choose_partitioning: all-zero layer");
        }
        int exp = 0;
        std::frexp(peak, &exp);  // peak in [2^{exp-1}, 2^{exp})
        std::vector<int> exps;
        for (int i = 0; i <= resolutions; ++i) exps.push_back(exp - i);
        out.emplace_back(std::move(exps));
    }
    return out;
}

// Saturate a sample to the largest quantizable magnitude under the plan's
// input partitioning (values at or above 2^{P_0}, e.g. a pixel equal to 1.0
// under P_0 = 0, would otherwise be rejected; saturation maps them to the
// same quantized value as the nearest in-range input).
inline std::vector<double> clamp_sample(const LayeredPlan& plan,
                                        std::span<const float> x) {
    const double limit = plan.input_clamp_limit();
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = std::clamp(static_cast<double>(x[i]), -limit, limit);
    }
    return out;
}

// Largest bit position taken by any accumulated pre-activation over a
// sample set: the smallest h with max |H| < 2^h. Feeds the network-level
// bound calculators, which need an empirical h_max.
inline int measure_h_max(const LayeredPlan& plan, const Dataset& data,
                         std::size_t sample_limit = 2000) {
    if (data.n() == 0) throw std::invalid_argument("measure_h_max: empty dataset");
    double peak = 0.0;
    const std::size_t n = std::min(sample_limit, data.n());
    for (std::size_t i = 0; i < n; ++i) {
        LayeredEvaluator eval(plan, clamp_sample(plan, data.sample(i)));
        while (!eval.complete()) eval.upgrade();
        for (std::size_t l = 1; l <= plan.model.layer_count(); ++l) {
            for (double h : eval.hidden(l)) peak = std::max(peak, std::fabs(h));
        }
    }
    if (peak == 0.0) return 0;
    int exp = 0;
    std::frexp(peak, &exp);
    return exp;
}

// Decision gray zone: outputs inside [low, high] request another upgrade.
// Boundary values count as inside.
struct GrayZonePolicy {
    double low = 0.3;
    double high = 0.6;
    double threshold = 0.5;

    void validate() const {
        if (!(low < threshold && threshold < high)) {
            throw std::invalid_argument("gray zone: need low < threshold < high");
        }
    }
    bool in_zone(double v) const { return v >= low && v <= high; }
};

struct AdaptiveTraceEntry {
    int resolutions_used = 0;
    double final_output = 0.0;
    int prediction = 0;
    int label = 0;
    bool final_in_zone = false;
};

// Upgrade until the output leaves the gray zone or resolutions run out.
inline AdaptiveTraceEntry infer_adaptive(const LayeredPlan& plan,
                                         std::span<const double> x,
                                         const GrayZonePolicy& policy,
                                         int label) {
    policy.validate();
    LayeredEvaluator eval(plan, x);
    AdaptiveTraceEntry entry;
    entry.label = label;
    double out = 0.0;
    while (!eval.complete()) {
        out = eval.upgrade()[0];
        entry.resolutions_used = eval.resolution();
        if (!policy.in_zone(out)) break;
    }
    entry.final_output = out;
    entry.final_in_zone = policy.in_zone(out);
    entry.prediction = out > policy.threshold ? 1 : 0;
    return entry;
}

// Area under the ROC curve by the rank statistic with midrank ties.
inline double roc_auc(std::span<const double> scores,
                      std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) {
        throw std::invalid_argument("roc_auc: size mismatch");
    }
    const std::size_t n = scores.size();
    std::size_t n1 = 0;
    for (auto y : labels) n1 += y ? 1 : 0;
    const std::size_t n0 = n - n1;
    if (n0 == 0 || n1 == 0) {
        throw std::invalid_argument("roc_auc: both classes required");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] < scores[b];
    });
    double positive_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            if (labels[order[k]]) positive_rank_sum += midrank;
        }
        i = j + 1;
    }
    return (positive_rank_sum -
            0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1)) /
           (static_cast<double>(n0) * static_cast<double>(n1));
}

// demand[k] = fraction of samples still inside the gray zone after k
// upgrades (demand[0] is 1: no prior information); `unresolved` is the
// fraction still inside after the final upgrade.
struct DemandProfile {
    std::vector<double> demand;
    double unresolved = 0.0;
};

inline DemandProfile demand_histogram(const std::vector<AdaptiveTraceEntry>& traces,
                                      int resolutions) {
    if (traces.empty()) throw std::invalid_argument("demand: no traces");
    DemandProfile prof;
    prof.demand.assign(static_cast<std::size_t>(resolutions), 0.0);
    prof.demand[0] = 1.0;
    double unresolved = 0.0;
    for (const auto& t : traces) {
        for (int k = 1; k < resolutions; ++k) {
            // still in zone after k upgrades <=> it went on to upgrade k+1
            // (or exhausted the budget while still in zone).
            if (t.resolutions_used > k ||
                (t.resolutions_used == k && t.final_in_zone)) {
                prof.demand[static_cast<std::size_t>(k)] += 1.0;
            }
        }
        if (t.resolutions_used == resolutions && t.final_in_zone) unresolved += 1.0;
    }
    const auto n = static_cast<double>(traces.size());
    for (int k = 1; k < resolutions; ++k) {
        prof.demand[static_cast<std::size_t>(k)] /= n;
    }
    prof.unresolved = unresolved / n;
    return prof;
}

// Full layered evaluation of a dataset: per-resolution scores, the
// quantized one-shot scores, and the adaptive traces, with accuracy/AUC for
// each. Single-output (binary) networks only.
struct LayeredMetrics {
    MatD scores;                       // n x R
    std::vector<double> quantized_one_shot;
    std::vector<AdaptiveTraceEntry> traces;
    std::vector<double> accuracy;      // per resolution
    std::vector<double> auc;           // per resolution
    double quantized_accuracy = 0.0;
    double quantized_auc = 0.0;
    double adaptive_accuracy = 0.0;
    double adaptive_auc = 0.0;
    DemandProfile demand;
};

inline LayeredMetrics evaluate_layered(const LayeredPlan& plan,
                                       const Dataset& data,
                                       const GrayZonePolicy& policy) {
    policy.validate();
    const int big_r = plan.resolutions;
    const std::size_t n = data.n();
    LayeredMetrics m;
    m.scores = MatD(n, static_cast<std::size_t>(big_r));
    m.quantized_one_shot.resize(n);
    m.traces.reserve(n);

    for (std::size_t i = 0; i < n; ++i) {
        const auto x = clamp_sample(plan, data.sample(i));
        LayeredEvaluator eval(plan, x);
        for (int r = 0; r < big_r; ++r) {
            m.scores(i, static_cast<std::size_t>(r)) = eval.upgrade()[0];
        }
        m.quantized_one_shot[i] = quantized_forward(plan, x)[0];
        // The adaptive trace is a prefix of the full run; reuse the scores.
        AdaptiveTraceEntry entry;
        entry.label = data.labels[i];
        int used = big_r;
        for (int r = 0; r < big_r; ++r) {
            if (!policy.in_zone(m.scores(i, static_cast<std::size_t>(r)))) {
                used = r + 1;
                break;
            }
        }
        entry.resolutions_used = used;
        entry.final_output = m.scores(i, static_cast<std::size_t>(used - 1));
        entry.final_in_zone = policy.in_zone(entry.final_output);
        entry.prediction = entry.final_output > policy.threshold ? 1 : 0;
        m.traces.push_back(entry);
    }

    const std::span<const std::uint8_t> labels(data.labels);
    auto accuracy_of = [&](std::span<const double> s) {
        std::size_t hits = 0;
        for (std::size_t i = 0; i < n; ++i) {
            hits += (s[i] > policy.threshold ? 1 : 0) == data.labels[i];
        }
        return static_cast<double>(hits) / static_cast<double>(n);
    };
    std::vector<double> col(n);
    for (int r = 0; r < big_r; ++r) {
        for (std::size_t i = 0; i < n; ++i) {
            col[i] = m.scores(i, static_cast<std::size_t>(r));
        }
        m.accuracy.push_back(accuracy_of(col));
        m.auc.push_back(roc_auc(col, labels));
    }
    m.quantized_accuracy = accuracy_of(m.quantized_one_shot);
    m.quantized_auc = roc_auc(m.quantized_one_shot, labels);
    for (std::size_t i = 0; i < n; ++i) col[i] = m.traces[i].final_output;
    m.adaptive_accuracy = accuracy_of(col);
    m.adaptive_auc = roc_auc(col, labels);
    m.demand = demand_histogram(m.traces, big_r);
    return m;
}

}  // namespace layercomp
