#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "layercomp/csv.hpp"
#include "layercomp/matrix.hpp"
#include "layercomp/partition.hpp"
#include "layercomp/piecewise.hpp"

namespace layercomp {

// Hidden activations are piecewise linear; the final map is applied exactly.
struct Activation {
    std::string name;
    PiecewiseLinear pla;

    static Activation from_name(const std::string& name) {
        if (name == "identity") return {name, PiecewiseLinear::identity()};
        if (name == "relu") return {name, PiecewiseLinear::relu()};
        if (name == "leaky_relu") return {name, PiecewiseLinear::leaky_relu()};
        if (name.rfind("sigmoid_pla", 0) == 0) {
            const int segments =
                name.size() > 11 ? std::stoi(name.substr(11)) : 8;
            return {name, make_sigmoid_pla(segments)};
        }
        throw std::invalid_argument("unknown hidden activation: " + name);
    }
};

enum class FinalMap { identity, sigmoid };

inline FinalMap final_map_from_name(const std::string& name) {
    if (name == "identity") return FinalMap::identity;
    if (name == "sigmoid") return FinalMap::sigmoid;
    throw std::invalid_argument("unknown final activation: " + name);
}

inline std::string final_map_name(FinalMap m) {
    return m == FinalMap::identity ? "identity" : "sigmoid";
}

inline void apply_final_map(FinalMap m, std::vector<double>& v) {
    if (m == FinalMap::sigmoid) {
        for (auto& x : v) x = sigmoid(x);
    }
}

// Feed-forward network with bias columns absorbed into the weights:
// weights[l] has shape n_{l+1} x (n_l + 1), bias last. hidden[l-1] is the
// activation between weights l-1 and l; the final map acts on the last
// pre-activation.
struct MlpModel {
    std::vector<MatD> weights;
    std::vector<Activation> hidden;
    FinalMap final_map = FinalMap::sigmoid;

    std::size_t layer_count() const { return weights.size(); }  // L + 1

    std::vector<std::size_t> widths() const {
        std::vector<std::size_t> w;
        w.push_back(weights.front().cols() - 1);
        for (const auto& m : weights) w.push_back(m.rows());
        return w;
    }

    void validate() const {
        if (weights.empty()) throw std::invalid_argument("model: no layers");
        if (hidden.size() + 1 != weights.size()) {
            throw std::invalid_argument("model: need one hidden activation "
                                        "between consecutive layers");
        }
        for (std::size_t l = 1; l < weights.size(); ++l) {
            if (weights[l].cols() != weights[l - 1].rows() + 1) {
                throw std::invalid_argument("model: layer shape mismatch");
            }
        }
    }

    // One-shot forward pass.
    std::vector<double> forward(std::span<const double> x) const {
        std::vector<double> a(x.begin(), x.end());
        for (std::size_t l = 0; l < weights.size(); ++l) {
            if (l > 0) {
                for (auto& v : a) v = hidden[l - 1].pla(v);
            }
            a.push_back(1.0);
            a = matvec(weights[l], a);
        }
        apply_final_map(final_map, a);
        return a;
    }
};

// ---- NNW1 text format -----------------------------------------------------
//
//   NNW1 L=<L>
//   <n0> <n1> ... <n(L+1)>
//   layer <l> rows <r> cols <c>
//   <row-major decimal weights, bias column last>
//   ...
//   act <hidden...> <final>

inline void save_nnw1(const MlpModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "NNW1 L=" << model.layer_count() - 1 << "\n";
    const auto w = model.widths();
    for (std::size_t i = 0; i < w.size(); ++i) out << (i ? " " : "") << w[i];
    out << "\n";
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        const auto& m = model.weights[l];
        out << "layer " << l << " rows " << m.rows() << " cols " << m.cols()
            << "\n";
        for (std::size_t r = 0; r < m.rows(); ++r) {
            for (std::size_t c = 0; c < m.cols(); ++c) {
                out << (c ? " " : "") << format_number(m(r, c));
            }
            out << "\n";
        }
    }
    out << "act";
    for (const auto& h : model.hidden) out << " " << h.name;
    out << " " << final_map_name(model.final_map) << "\n";
}

inline MlpModel load_nnw1(std::istream& in) {
    std::string word;
    in >> word;
    if (word != "NNW1") throw std::runtime_error("nnw1: bad magic");
    in >> word;
    if (word.rfind("L=", 0) != 0) throw std::runtime_error("nnw1: missing L=");
    const int layers = std::stoi(word.substr(2)) + 1;
    std::vector<std::size_t> widths(static_cast<std::size_t>(layers) + 1);
    for (auto& wdt : widths) {
        if (!(in >> wdt)) throw std::runtime_error("nnw1: truncated widths");
    }
    MlpModel model;
    for (int l = 0; l < layers; ++l) {
        std::size_t idx = 0, rows = 0, cols = 0;
        in >> word >> idx >> word >> rows >> word >> cols;
        if (!in) throw std::runtime_error("nnw1: bad layer header");
        if (rows != widths[static_cast<std::size_t>(l) + 1] ||
            cols != widths[static_cast<std::size_t>(l)] + 1) {
            throw std::runtime_error("nnw1: layer shape disagrees with widths");
        }
        MatD m(rows, cols);
        for (auto& v : m.data()) {
            if (!(in >> v)) throw std::runtime_error("nnw1: truncated weights");
        }
        model.weights.push_back(std::move(m));
    }
    in >> word;
    if (word != "act") throw std::runtime_error("nnw1: missing act line");
    for (int l = 0; l + 1 < layers; ++l) {
        in >> word;
        model.hidden.push_back(Activation::from_name(word));
    }
    in >> word;
    model.final_map = final_map_from_name(word);
    model.validate();
    return model;
}

inline MlpModel load_nnw1(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    return load_nnw1(in);
}

// ---- Layered evaluation ----------------------------------------------------

// Sample-independent evaluation plan: partitioned weights, the per-resolution
// weight deltas, and the running accumulated weights. The accumulations only
// depend on the resolution index, so they are shared by every sample.
struct LayeredPlan {
    MlpModel model;
    PartitioningVector px;
    std::vector<PartitioningVector> pw;
    int h_min;
    int resolutions;

    std::vector<LayeredMatrix> w_parts;
    // delta_a[l][r-1] = W_{l,r} * 2^{P_{W,l}(r)}
    std::vector<std::vector<MatD>> delta_a;
    // a_accum[l][r]   = sum_{i<=r} delta_a[l][i-1]   (a_accum[l][0] is zero)
    std::vector<std::vector<MatD>> a_accum;

    LayeredPlan(MlpModel m, PartitioningVector px_in,
                std::vector<PartitioningVector> pw_in, int h_min_in)
        : model(std::move(m)),
          px(std::move(px_in)),
          pw(std::move(pw_in)),
          h_min(h_min_in),
          resolutions(px.depth()) {
        model.validate();
        if (pw.size() != model.layer_count()) {
            throw std::invalid_argument("plan: need one partitioning vector "
                                        "per weight layer");
        }
        for (const auto& pv : pw) {
            if (pv.depth() != resolutions) {
                throw std::invalid_argument(
                    "plan: partitioning vectors must share one depth");
            }
        }
        for (std::size_t l = 0; l < model.weights.size(); ++l) {
            w_parts.push_back(partition(model.weights[l], pw[l]));
        }
        delta_a.resize(w_parts.size());
        a_accum.resize(w_parts.size());
        for (std::size_t l = 0; l < w_parts.size(); ++l) {
            const auto& wm = model.weights[l];
            MatD acc(wm.rows(), wm.cols(), 0.0);
            a_accum[l].push_back(acc);
            for (int r = 1; r <= resolutions; ++r) {
                const double scale = std::ldexp(1.0, pw[l].exponent(r));
                MatD da(wm.rows(), wm.cols());
                const auto& comp =
                    w_parts[l].components[static_cast<std::size_t>(r - 1)];
                for (std::size_t k = 0; k < da.data().size(); ++k) {
                    da.data()[k] = static_cast<double>(comp.data()[k]) * scale;
                    acc.data()[k] += da.data()[k];
                }
                delta_a[l].push_back(std::move(da));
                a_accum[l].push_back(acc);
            }
        }
    }

    // Activation applied to pre-activation l (l = 0 is the input, identity).
    const PiecewiseLinear& sigma(std::size_t l) const {
        static const PiecewiseLinear id = PiecewiseLinear::identity();
        return l == 0 ? id : model.hidden[l - 1].pla;
    }

    // Largest magnitude partitionable under px at its granularity; inputs
    // are saturated here before quantization.
    double input_clamp_limit() const {
        return std::ldexp(static_cast<double>((std::int64_t{1} << px.span_bits()) - 1),
                          px.pd());
    }
};

inline double prune_to(double v, int h_min) {
    return std::ldexp(std::floor(std::ldexp(v, -h_min)), h_min);
}

// Per-sample layered evaluation state: accumulated pre-activations plus the
// partitioned input. Each upgrade injects one component of the input and of
// every weight matrix and propagates the deltas through the layers.
class LayeredEvaluator {
public:
    LayeredEvaluator(const LayeredPlan& plan, std::span<const double> x)
        : plan_(&plan), x_parts_(partition(x, plan.px)) {
        const auto widths = plan.model.widths();
        if (x.size() != widths.front()) {
            throw std::invalid_argument("evaluator: input width mismatch");
        }
        h_.resize(widths.size());
        for (std::size_t l = 0; l < widths.size(); ++l) {
            h_[l].assign(widths[l], 0.0);
        }
    }

    int resolution() const { return r_; }
    bool complete() const { return r_ == plan_->resolutions; }
    const std::vector<double>& hidden(std::size_t l) const { return h_[l]; }

    // One full pass of the outer loop; returns Omega_r.
    std::vector<double> upgrade() {
        if (complete()) {
            throw std::logic_error("upgrade: resolutions exhausted");
        }
        const int r = r_ + 1;
        const std::size_t layers = plan_->model.layer_count();

        // Input delta: X_r * 2^{P_X(r)}.
        std::vector<double> dh(h_[0].size());
        const double xscale = std::ldexp(1.0, plan_->px.exponent(r));
        const auto& xcomp = x_parts_.components[static_cast<std::size_t>(r - 1)];
        for (std::size_t k = 0; k < dh.size(); ++k) {
            dh[k] = static_cast<double>(xcomp(k, 0)) * xscale;
        }

        for (std::size_t l = 0; l < layers; ++l) {
            const auto& sigma = plan_->sigma(l);
            auto& t = h_[l];
            const std::size_t n = t.size();

            // u = [sigma^t(dh); 0],  v = [sigma(t); 1]; the appended slot is
            // pinned so the bias channel stays exact for any activation.
            std::vector<double> u(n + 1), v(n + 1);
            for (std::size_t k = 0; k < n; ++k) {
                u[k] = sigma.delta(t[k], dh[k]);
                v[k] = sigma(t[k]);
            }
            u[n] = 0.0;
            v[n] = 1.0;

            // Record the updated pre-activation for the next resolution.
            for (std::size_t k = 0; k < n; ++k) t[k] += dh[k];

            const MatD& a_old = plan_->a_accum[l][static_cast<std::size_t>(r - 1)];
            const MatD& da = plan_->delta_a[l][static_cast<std::size_t>(r - 1)];
            std::vector<double> next(a_old.rows());
            for (std::size_t row = 0; row < a_old.rows(); ++row) {
                double acc = 0.0;
                const auto arow = a_old.row(row);
                const auto drow = da.row(row);
                for (std::size_t c = 0; c <= n; ++c) {
                    acc += arow[c] * u[c] + drow[c] * v[c] + drow[c] * u[c];
                }
                next[row] = prune_to(acc, plan_->h_min);
            }
            dh = std::move(next);
        }

        auto& out = h_[layers];
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += dh[k];
        ++r_;

        std::vector<double> omega = out;
        apply_final_map(plan_->model.final_map, omega);
        return omega;
    }

private:
    const LayeredPlan* plan_;
    LayeredMatrix x_parts_;
    std::vector<std::vector<double>> h_;
    int r_ = 0;
};

// One-shot forward pass on the fully reconstructed quantized weights and
// quantized input: what the final resolution upgrade converges to when no
// bits are pruned.
inline std::vector<double> quantized_forward(const LayeredPlan& plan,
                                             std::span<const double> x) {
    const auto xq = partition(x, plan.px).reconstruct();
    std::vector<double> a(xq.data());
    for (std::size_t l = 0; l < plan.model.layer_count(); ++l) {
        if (l > 0) {
            for (auto& v : a) v = plan.model.hidden[l - 1].pla(v);
        }
        a.push_back(1.0);
        a = matvec(plan.a_accum[l].back(), a);
    }
    apply_final_map(plan.model.final_map, a);
    return a;
}

}  // namespace layercomp
