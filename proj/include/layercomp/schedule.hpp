#pragma once

#include <algorithm>
#include <stdexcept>
#include <utility>
#include <vector>

#include "layercomp/partition.hpp"

namespace layercomp {

// Ordering of the d^2 component-pair products by descending exponent sum:
// most significant partial products first. Pairs are 1-based (i, j).
struct ResolutionSchedule {
    std::vector<std::pair<int, int>> order;
    std::vector<int> exponent_sums;

    int size() const { return static_cast<int>(order.size()); }
};

// Ties in the exponent sum are broken lexicographically on (i, j) ascending.
inline ResolutionSchedule make_schedule(const PartitioningVector& pv_left,
                                        const PartitioningVector& pv_right) {
    if (pv_left.depth() != pv_right.depth()) {
        throw std::invalid_argument("mismatched depth: partitioning vectors "
                                    "must have equal component counts");
    }
    const int d = pv_left.depth();
    ResolutionSchedule sched;
    sched.order.reserve(static_cast<std::size_t>(d) * d);
    for (int i = 1; i <= d; ++i) {
        for (int j = 1; j <= d; ++j) {
            sched.order.emplace_back(i, j);
        }
    }
    auto sum_of = [&](const std::pair<int, int>& p) {
        return pv_left.exponent(p.first) + pv_right.exponent(p.second);
    };
    std::stable_sort(sched.order.begin(), sched.order.end(),
                     [&](const auto& a, const auto& b) {
                         return sum_of(a) > sum_of(b);
                     });
    sched.exponent_sums.reserve(sched.order.size());
    for (const auto& p : sched.order) sched.exponent_sums.push_back(sum_of(p));
    return sched;
}

}  // namespace layercomp
