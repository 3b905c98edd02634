#include <catch_amalgamated.hpp>

#include <cmath>

#include "layercomp/rng.hpp"
#include "layercomp/train.hpp"

using namespace layercomp;

namespace {

// Two well-separated Gaussian-ish blobs in 8 dimensions.
Dataset separable_toy(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Dataset ds;
    ds.rows = 1;
    ds.cols = 8;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t y = i % 2;
        ds.labels.push_back(y);
        ds.digits.push_back(y);
        for (std::size_t f = 0; f < 8; ++f) {
            const double center = y ? 0.75 : 0.25;
            ds.pixels.push_back(static_cast<float>(center + rng.uniform(-0.1, 0.1)));
        }
    }
    return ds;
}

}  // namespace

TEST_CASE("zero learning rate leaves the weights at initialization") {
    const auto data = separable_toy(50, 3);
    TrainConfig frozen;
    frozen.epochs = 3;
    frozen.lr = 0.0;
    frozen.seed = 11;
    frozen.hidden_widths = {4};
    const auto a = train_mlp(data, frozen);
    TrainConfig oneshot = frozen;
    oneshot.epochs = 0;
    const auto b = train_mlp(data, oneshot);
    REQUIRE(a.model.weights.size() == b.model.weights.size());
    for (std::size_t l = 0; l < a.model.weights.size(); ++l) {
        CHECK(a.model.weights[l] == b.model.weights[l]);
    }
}

TEST_CASE("loss decreases monotonically on a separable toy set") {
    const auto data = separable_toy(200, 4);
    TrainConfig cfg;
    cfg.epochs = 8;
    cfg.batch = 20;
    cfg.lr = 0.02;
    cfg.seed = 5;
    cfg.hidden_widths = {8};
    const auto result = train_mlp(data, cfg);
    REQUIRE(result.epoch_loss.size() == 8);
    for (std::size_t e = 1; e < result.epoch_loss.size(); ++e) {
        CHECK(result.epoch_loss[e] < result.epoch_loss[e - 1]);
    }
    CHECK(binary_accuracy(result.model, data) > 0.95);
}

TEST_CASE("training is deterministic in the seed") {
    const auto data = separable_toy(80, 6);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch = 16;
    cfg.lr = 0.01;
    cfg.seed = 77;
    cfg.hidden_widths = {5};
    const auto a = train_mlp(data, cfg);
    const auto b = train_mlp(data, cfg);
    for (std::size_t l = 0; l < a.model.weights.size(); ++l) {
        CHECK(a.model.weights[l] == b.model.weights[l]);
    }
    CHECK(a.epoch_loss == b.epoch_loss);

    cfg.seed = 78;
    const auto c = train_mlp(data, cfg);
    CHECK(c.model.weights[0] != a.model.weights[0]);
}

TEST_CASE("empty dataset is rejected") {
    Dataset empty;
    empty.rows = empty.cols = 1;
    CHECK_THROWS_AS(train_mlp(empty, TrainConfig{}), std::invalid_argument);
}

TEST_CASE("bias column starts at zero and moves during training") {
    const auto data = separable_toy(100, 8);
    TrainConfig cfg;
    cfg.epochs = 0;
    cfg.seed = 9;
    cfg.hidden_widths = {4};
    const auto init = train_mlp(data, cfg);
    for (const auto& w : init.model.weights) {
        for (std::size_t r = 0; r < w.rows(); ++r) {
            CHECK(w(r, w.cols() - 1) == 0.0);
        }
    }
    cfg.epochs = 4;
    cfg.lr = 0.05;
    const auto trained = train_mlp(data, cfg);
    double moved = 0.0;
    const auto& w = trained.model.weights.back();
    for (std::size_t r = 0; r < w.rows(); ++r) {
        moved += std::fabs(w(r, w.cols() - 1));
    }
    CHECK(moved > 0.0);
}
