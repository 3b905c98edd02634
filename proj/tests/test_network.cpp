#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "layercomp/network.hpp"
#include "layercomp/rng.hpp"

using namespace layercomp;

namespace {

// Weights bounded so unit-spaced partitioning vectors around 2^0 hold them.
MlpModel random_model(Rng& rng, std::size_t inputs,
                      const std::vector<std::size_t>& hidden,
                      std::size_t outputs, const std::string& act) {
    MlpModel model;
    std::size_t prev = inputs;
    auto layer = [&](std::size_t rows) {
        MatD w(rows, prev + 1);
        for (auto& v : w.data()) v = rng.uniform(-0.9, 0.9);
        model.weights.push_back(std::move(w));
        prev = rows;
    };
    for (std::size_t h : hidden) {
        layer(h);
        model.hidden.push_back(Activation::from_name(act));
    }
    layer(outputs);
    model.final_map = FinalMap::sigmoid;
    model.validate();
    return model;
}

std::vector<PartitioningVector> unit_pvs(std::size_t layers, int p0, int depth) {
    std::vector<int> e;
    for (int i = 0; i <= depth; ++i) e.push_back(p0 - i);
    return std::vector<PartitioningVector>(layers, PartitioningVector(e));
}

}  // namespace

TEST_CASE("nnw1 round trip") {
    MlpModel model;
    model.weights.push_back(MatD{{0.5, -0.25, 0.125}, {1.0, 0.75, -0.5}});
    model.weights.push_back(MatD{{0.0625, -1.0, 0.3}});
    model.hidden.push_back(Activation::from_name("relu"));
    model.final_map = FinalMap::sigmoid;
    model.validate();

    const auto path = std::filesystem::temp_directory_path() / "roundtrip.nnw";
    save_nnw1(model, path.string());
    const auto loaded = load_nnw1(path.string());
    REQUIRE(loaded.weights.size() == 2);
    CHECK(loaded.weights[0] == model.weights[0]);
    CHECK(loaded.weights[1] == model.weights[1]);
    CHECK(loaded.hidden[0].name == "relu");
    CHECK(loaded.final_map == FinalMap::sigmoid);

    std::istringstream bad("NOPE 1");
    CHECK_THROWS_AS(load_nnw1(bad), std::runtime_error);
    std::istringstream truncated("NNW1 L=1\n2 2 1\nlayer 0 rows 2 cols 3\n1 2");
    CHECK_THROWS_AS(load_nnw1(truncated), std::runtime_error);
}

TEST_CASE("identity network reproduces the quantized input exactly") {
    MlpModel model;
    model.weights.push_back(MatD{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}});
    model.final_map = FinalMap::identity;
    model.validate();

    LayeredPlan plan(model, PartitioningVector({0, -1, -2}),
                     {PartitioningVector({1, 0, -1})}, /*h_min=*/-10);
    const std::vector<double> x{0.75, -0.5};
    LayeredEvaluator eval(plan, x);
    std::vector<double> omega;
    while (!eval.complete()) omega = eval.upgrade();
    CHECK(omega[0] == 0.75);
    CHECK(omega[1] == -0.5);
    CHECK_THROWS_AS(eval.upgrade(), std::logic_error);
}

TEST_CASE("input width is checked") {
    MlpModel model;
    model.weights.push_back(MatD{{1.0, 0.0}});
    model.final_map = FinalMap::identity;
    LayeredPlan plan(model, PartitioningVector({0, -1}),
                     {PartitioningVector({1, 0})}, -10);
    CHECK_THROWS_AS(LayeredEvaluator(plan, std::vector<double>{1.0, 2.0}),
                    std::invalid_argument);
}

TEST_CASE("deep pruning limit matches the quantized one-shot pass") {
    Rng rng(31);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t layers = 1 + rng.below(3);  // L up to 2 here
        std::vector<std::size_t> hidden;
        for (std::size_t l = 0; l + 1 < layers; ++l) {
            hidden.push_back(2 + rng.below(6));
        }
        const std::size_t inputs = 2 + rng.below(6);
        const auto model = random_model(rng, inputs, hidden, 1 + rng.below(3),
                                        trial % 2 ? "relu" : "leaky_relu");
        const int depth = 2 + static_cast<int>(rng.below(3));
        LayeredPlan plan(model, PartitioningVector([&] {
                             std::vector<int> e;
                             for (int i = 0; i <= depth; ++i) e.push_back(-i);
                             return e;
                         }()),
                         unit_pvs(model.layer_count(), 0, depth), /*h_min=*/-60);
        std::vector<double> x(inputs);
        for (auto& v : x) v = rng.uniform(0.0, 0.999);

        LayeredEvaluator eval(plan, x);
        std::vector<double> omega;
        while (!eval.complete()) omega = eval.upgrade();
        const auto oneshot = quantized_forward(plan, x);
        REQUIRE(omega.size() == oneshot.size());
        for (std::size_t k = 0; k < omega.size(); ++k) {
            CHECK(std::fabs(omega[k] - oneshot[k]) < 1e-9);
        }
    }
}

TEST_CASE("accumulated weights equal the running component sums") {
    Rng rng(33);
    const auto model = random_model(rng, 4, {5}, 2, "relu");
    const int depth = 3;
    LayeredPlan plan(model, PartitioningVector({0, -1, -2, -3}),
                     unit_pvs(model.layer_count(), 0, depth), -40);
    for (std::size_t l = 0; l < plan.w_parts.size(); ++l) {
        for (int r = 1; r <= depth; ++r) {
            MatD expect(model.weights[l].rows(), model.weights[l].cols(), 0.0);
            for (int i = 1; i <= r; ++i) {
                const double scale = std::ldexp(1.0, plan.pw[l].exponent(i));
                const auto& comp = plan.w_parts[l].components[static_cast<std::size_t>(i - 1)];
                for (std::size_t k = 0; k < expect.data().size(); ++k) {
                    expect.data()[k] += static_cast<double>(comp.data()[k]) * scale;
                }
            }
            const auto& got = plan.a_accum[l][static_cast<std::size_t>(r)];
            for (std::size_t k = 0; k < expect.data().size(); ++k) {
                CHECK(got.data()[k] == Catch::Approx(expect.data()[k]).margin(0));
            }
        }
    }
}

TEST_CASE("pruning floors toward minus infinity on the scaled value") {
    CHECK(prune_to(0.999, -2) == 0.75);
    CHECK(prune_to(-0.999, -2) == -1.0);
    CHECK(prune_to(0.75, -2) == 0.75);
    CHECK(prune_to(1e-9, -4) == 0.0);
}

TEST_CASE("plan validates partitioning depths") {
    MlpModel model;
    model.weights.push_back(MatD{{1.0, 0.0}});
    model.final_map = FinalMap::identity;
    CHECK_THROWS_AS(LayeredPlan(model, PartitioningVector({0, -1, -2}),
                                {PartitioningVector({1, 0})}, -10),
                    std::invalid_argument);
    CHECK_THROWS_AS(LayeredPlan(model, PartitioningVector({0, -1}), {}, -10),
                    std::invalid_argument);
}
