#pragma once

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "layercomp/idx.hpp"
#include "layercomp/network.hpp"
#include "layercomp/rng.hpp"

namespace layercomp {

struct TrainConfig {
    int epochs = 10;
    int batch = 100;
    double lr = 1e-4;
    std::uint64_t seed = 1;
    std::vector<std::size_t> hidden_widths = {20, 20};
};

struct TrainResult {
    MlpModel model;
    std::vector<double> epoch_loss;  // mean BCE per sample
};

namespace detail {

inline MatD glorot_init(Rng& rng, std::size_t fan_out, std::size_t fan_in) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    MatD w(fan_out, fan_in + 1, 0.0);  // bias column zero
    for (std::size_t r = 0; r < fan_out; ++r) {
        for (std::size_t c = 0; c < fan_in; ++c) {
            w(r, c) = rng.uniform(-bound, bound);
        }
    }
    return w;
}

}  // namespace detail

// Plain SGD on binary cross-entropy for a ReLU MLP with a sigmoid output.
// Each step applies the batch-summed gradient scaled by the learning rate.
// Deterministic for a fixed seed.
inline TrainResult train_mlp(const Dataset& data, const TrainConfig& cfg) {
    if (data.n() == 0) throw std::invalid_argument("train: empty dataset");
    const std::size_t in_dim = data.features();

    Rng rng(cfg.seed);
    MlpModel model;
    std::size_t prev = in_dim;
    for (std::size_t w : cfg.hidden_widths) {
        model.weights.push_back(detail::glorot_init(rng, w, prev));
        model.hidden.push_back(Activation::from_name("relu"));
        prev = w;
    }
    model.weights.push_back(detail::glorot_init(rng, 1, prev));
    model.final_map = FinalMap::sigmoid;
    model.validate();

    const std::size_t layers = model.layer_count();
    std::vector<MatD> grads;
    for (const auto& w : model.weights) grads.emplace_back(w.rows(), w.cols(), 0.0);

    std::vector<std::size_t> order(data.n());
    std::iota(order.begin(), order.end(), std::size_t{0});

    // Per-sample workspaces: pre-activations z and activations a per layer.
    std::vector<std::vector<double>> z(layers), a(layers + 1), dz(layers);

    TrainResult result;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < data.n();
             start += static_cast<std::size_t>(cfg.batch)) {
            const std::size_t stop =
                std::min(data.n(), start + static_cast<std::size_t>(cfg.batch));
            for (auto& g : grads) {
                std::fill(g.data().begin(), g.data().end(), 0.0);
            }
            for (std::size_t s = start; s < stop; ++s) {
                const auto x = data.sample(order[s]);
                const double y = data.labels[order[s]];

                a[0].assign(x.begin(), x.end());
                for (std::size_t l = 0; l < layers; ++l) {
                    const auto& w = model.weights[l];
                    z[l].assign(w.rows(), 0.0);
                    for (std::size_t r = 0; r < w.rows(); ++r) {
                        const auto row = w.row(r);
                        double acc = row[a[l].size()];  // bias
                        for (std::size_t c = 0; c < a[l].size(); ++c) {
                            acc += row[c] * a[l][c];
                        }
                        z[l][r] = acc;
                    }
                    a[l + 1] = z[l];
                    if (l + 1 < layers) {
                        for (auto& t : a[l + 1]) t = t > 0.0 ? t : 0.0;
                    }
                }
                const double p = sigmoid(z[layers - 1][0]);
                constexpr double eps = 1e-12;
                loss_sum -= y * std::log(p + eps) + (1.0 - y) * std::log(1.0 - p + eps);

                dz[layers - 1] = {p - y};
                for (std::size_t l = layers; l-- > 0;) {
                    auto& g = grads[l];
                    for (std::size_t r = 0; r < g.rows(); ++r) {
                        const double d = dz[l][r];
                        auto row = g.row(r);
                        for (std::size_t c = 0; c < a[l].size(); ++c) {
                            row[c] += d * a[l][c];
                        }
                        row[a[l].size()] += d;
                    }
                    if (l == 0) break;
                    dz[l - 1].assign(a[l].size(), 0.0);
                    const auto& w = model.weights[l];
                    for (std::size_t r = 0; r < w.rows(); ++r) {
                        const double d = dz[l][r];
                        const auto row = w.row(r);
                        for (std::size_t c = 0; c < dz[l - 1].size(); ++c) {
                            dz[l - 1][c] += row[c] * d;
                        }
                    }
                    for (std::size_t c = 0; c < dz[l - 1].size(); ++c) {
                        if (z[l - 1][c] <= 0.0) dz[l - 1][c] = 0.0;
                    }
                }
            }
            for (std::size_t l = 0; l < layers; ++l) {
                auto& w = model.weights[l].data();
                const auto& g = grads[l].data();
                for (std::size_t k = 0; k < w.size(); ++k) w[k] -= cfg.lr * g[k];
            }
        }
        result.epoch_loss.push_back(loss_sum / static_cast<double>(data.n()));
    }
    result.model = std::move(model);
    return result;
}

inline double binary_accuracy(const MlpModel& model, const Dataset& data,
                              double threshold = 0.5) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < data.n(); ++i) {
        const auto out = model.forward(data.sample_d(i));
        const int pred = out[0] > threshold ? 1 : 0;
        hits += pred == data.labels[i];
    }
    return static_cast<double>(hits) / static_cast<double>(data.n());
}

}  // namespace layercomp
