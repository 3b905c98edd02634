#include <catch_amalgamated.hpp>

#include "layercomp/adaptive.hpp"
#include "layercomp/rng.hpp"

using namespace layercomp;

namespace {

// Single-input single-output identity-ish network for policy tests. The
// unit weight sits entirely in its first component, so the output after r
// upgrades is sigmoid of the partially reconstructed input.
LayeredPlan scalar_plan(int depth, int h_min = -20) {
    MlpModel model;
    model.weights.push_back(MatD{{1.0, 0.0}});
    model.final_map = FinalMap::sigmoid;
    std::vector<int> px, pw;
    for (int i = 0; i <= depth; ++i) {
        px.push_back(2 - i);
        pw.push_back(1 - i);
    }
    return LayeredPlan(model, PartitioningVector(px),
                       {PartitioningVector(pw)}, h_min);
}

}  // namespace

TEST_CASE("gray zone policy validation and membership") {
    GrayZonePolicy policy;
    policy.validate();
    CHECK(policy.in_zone(0.3));   // boundary counts as inside
    CHECK(policy.in_zone(0.6));
    CHECK(policy.in_zone(0.45));
    CHECK_FALSE(policy.in_zone(0.2999));
    CHECK_FALSE(policy.in_zone(0.6001));
    GrayZonePolicy bad{0.5, 0.6, 0.45};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("adaptive stops when the output leaves the zone") {
    const auto plan = scalar_plan(4);
    GrayZonePolicy policy;
    // x = 3.0 reconstructs its top bit first: sigmoid(2) = 0.88 after r=1.
    const auto early = infer_adaptive(plan, std::vector<double>{3.0}, policy, 1);
    CHECK(early.resolutions_used == 1);
    CHECK(early.prediction == 1);
    CHECK_FALSE(early.final_in_zone);

    // x = 0.25: nothing lands until the bit at 2^-2 (r = 4 of 4).
    const auto late = infer_adaptive(plan, std::vector<double>{0.25}, policy, 0);
    CHECK(late.resolutions_used == 4);
    CHECK(late.final_output == sigmoid(0.25));
    CHECK(late.final_in_zone);  // 0.56 still inside [0.3, 0.6]
    CHECK(late.prediction == 1);
}

TEST_CASE("roc auc on worked cases") {
    const std::vector<std::uint8_t> labels{0, 0, 1, 1};
    CHECK(roc_auc(std::vector<double>{0.0, 0.0, 1.0, 1.0}, labels) == 1.0);
    CHECK(roc_auc(std::vector<double>{1.0, 1.0, 0.0, 0.0}, labels) == 0.0);
    CHECK(roc_auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, labels) == 0.75);
    // all-tied scores: chance level via midranks
    CHECK(roc_auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, labels) == 0.5);
    CHECK_THROWS_AS(roc_auc(std::vector<double>{0.1, 0.2},
                            std::vector<std::uint8_t>{1, 1}),
                    std::invalid_argument);
}

TEST_CASE("roc auc agrees with pairwise enumeration") {
    Rng rng(19);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 3 + rng.below(40);
        std::vector<double> scores(n);
        std::vector<std::uint8_t> labels(n);
        bool has0 = false, has1 = false;
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = static_cast<double>(rng.below(8)) / 8.0;  // force ties
            labels[i] = rng.uniform() < 0.5 ? 0 : 1;
            (labels[i] ? has1 : has0) = true;
        }
        if (!has0 || !has1) continue;
        double wins = 0.0, pairs = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (labels[i] == 1 && labels[j] == 0) {
                    pairs += 1.0;
                    if (scores[i] > scores[j]) wins += 1.0;
                    else if (scores[i] == scores[j]) wins += 0.5;
                }
            }
        }
        CHECK(roc_auc(scores, labels) == Catch::Approx(wins / pairs).margin(1e-12));
    }
}

TEST_CASE("demand histogram from synthetic traces") {
    // 4 resolutions; traces: stop at 1 (out), stop at 3 (out), exhausted
    // in-zone, exhausted out-of-zone at 4.
    std::vector<AdaptiveTraceEntry> traces;
    traces.push_back({1, 0.9, 1, 1, false});
    traces.push_back({3, 0.1, 0, 0, false});
    traces.push_back({4, 0.5, 0, 1, true});
    traces.push_back({4, 0.7, 1, 1, false});
    const auto prof = demand_histogram(traces, 4);
    REQUIRE(prof.demand.size() == 4);
    CHECK(prof.demand[0] == 1.0);
    CHECK(prof.demand[1] == 0.75);  // all but the first
    CHECK(prof.demand[2] == 0.75);
    CHECK(prof.demand[3] == 0.5);   // both exhausted runs sat in the zone at r=3
    CHECK(prof.unresolved == 0.25);
    for (std::size_t k = 1; k < prof.demand.size(); ++k) {
        CHECK(prof.demand[k] <= prof.demand[k - 1]);
    }
}

TEST_CASE("all samples outside the zone at the first upgrade") {
    std::vector<AdaptiveTraceEntry> traces(5, AdaptiveTraceEntry{1, 0.99, 1, 1, false});
    const auto prof = demand_histogram(traces, 4);
    CHECK(prof.demand == std::vector<double>{1.0, 0.0, 0.0, 0.0});
    CHECK(prof.unresolved == 0.0);
}

TEST_CASE("partitioning choice follows the weight peaks") {
    MlpModel model;
    model.weights.push_back(MatD{{0.45, 0.0}});
    model.weights.push_back(MatD{{1.0, 0.0}});
    model.weights.push_back(MatD{{1.7, 0.0}});
    model.hidden.push_back(Activation::from_name("relu"));
    model.hidden.push_back(Activation::from_name("relu"));
    model.final_map = FinalMap::sigmoid;

    const auto pvs = choose_partitioning(model, 4);
    REQUIRE(pvs.size() == 3);
    CHECK(pvs[0].to_string() == "-1,-2,-3,-4,-5");
    CHECK(pvs[1].to_string() == "1,0,-1,-2,-3");  // 1.0 needs P0 = 1
    CHECK(pvs[2].to_string() == "1,0,-1,-2,-3");

    MlpModel zero;
    zero.weights.push_back(MatD(1, 2, 0.0));
    zero.final_map = FinalMap::sigmoid;
    CHECK_THROWS_AS(choose_partitioning(zero, 4), std::invalid_argument);
}

TEST_CASE("exact power of two stays strictly below the chosen bound") {
    MlpModel model;
    model.weights.push_back(MatD{{0.5, 0.0}});
    model.final_map = FinalMap::sigmoid;
    const auto pvs = choose_partitioning(model, 2);
    CHECK(pvs[0].p0() == 0);  // 0.5 < 2^0
}

TEST_CASE("h_max measurement tracks the largest pre-activation bit") {
    const auto plan = scalar_plan(4);
    Dataset ds;
    ds.rows = 1;
    ds.cols = 1;
    ds.pixels = {3.0f, 0.5f};
    ds.labels = {1, 0};
    ds.digits = {1, 0};
    // accumulated H reaches 3.0 for the first sample: 2^1 <= 3 < 2^2
    CHECK(measure_h_max(plan, ds) == 2);
    ds.pixels = {0.0f, 0.0f};
    CHECK(measure_h_max(plan, ds) == 0);
}

TEST_CASE("sample clamping saturates at the quantization ceiling") {
    const auto plan = scalar_plan(2);  // px = [2,1,0], limit = 3
    const std::vector<float> x{5.0f, -9.0f, 1.5f};
    const auto clamped = clamp_sample(plan, x);
    CHECK(clamped[0] == 3.0);
    CHECK(clamped[1] == -3.0);
    CHECK(clamped[2] == 1.5);
}
