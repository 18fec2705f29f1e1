#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "ada/tensor.hpp"

namespace ada {

enum class Activation { Sigmoid, Tanh, Relu };

// Fully-connected network: affine layers with a shared hidden activation
// and a softmax cross-entropy head on the last layer's logits.
struct MlpSpec {
    std::vector<std::size_t> layer_sizes;  // input dim, hidden dims..., class count
    Activation activation = Activation::Tanh;

    std::size_t input_dim() const { return layer_sizes.front(); }
    std::size_t class_count() const { return layer_sizes.back(); }
    std::size_t num_layers() const { return layer_sizes.size() - 1; }

    void validate() const {
        if (layer_sizes.size() < 2)
            throw std::invalid_argument("MlpSpec needs at least input and output sizes");
        for (std::size_t s : layer_sizes)
            if (s < 1) throw std::invalid_argument("MlpSpec layer sizes must be >= 1");
    }
};

struct LayerTensors {
    Tensor w;  // [out x in]
    Tensor b;  // [out]
};

// Per-layer weight/bias tensors. Gradients share the exact same layout.
struct ParamSet {
    std::vector<LayerTensors> layers;

    static ParamSet zeros(const MlpSpec& spec) {
        spec.validate();
        ParamSet p;
        p.layers.reserve(spec.num_layers());
        for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
            LayerTensors lt;
            lt.w = Tensor({spec.layer_sizes[l + 1], spec.layer_sizes[l]});
            lt.b = Tensor({spec.layer_sizes[l + 1]});
            p.layers.push_back(std::move(lt));
        }
        return p;
    }

    std::size_t numel() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.w.numel() + l.b.numel();
        return n;
    }
};

using Params = ParamSet;
using GradientSet = ParamSet;

inline void require_congruent(const ParamSet& a, const ParamSet& b, const char* what) {
    if (a.layers.size() != b.layers.size())
        throw std::invalid_argument(std::string("layer count mismatch in ") + what);
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        require_same_shape(a.layers[l].w, b.layers[l].w, what);
        require_same_shape(a.layers[l].b, b.layers[l].b, what);
    }
}

// Visit every parameter entry of one set, layer by layer, weights then bias.
template <typename Fn>
void for_each_entry(ParamSet& p, Fn&& fn) {
    for (auto& l : p.layers) {
        for (double& v : l.w.data) fn(v);
        for (double& v : l.b.data) fn(v);
    }
}

template <typename Fn>
void for_each_entry(const ParamSet& p, Fn&& fn) {
    for (const auto& l : p.layers) {
        for (double v : l.w.data) fn(v);
        for (double v : l.b.data) fn(v);
    }
}

// Visit paired entries of two congruent sets in the same fixed order.
template <typename Fn>
void for_each_pair(ParamSet& a, const ParamSet& b, Fn&& fn) {
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        auto& la = a.layers[l];
        const auto& lb = b.layers[l];
        for (std::size_t i = 0; i < la.w.numel(); ++i) fn(la.w.data[i], lb.w.data[i]);
        for (std::size_t i = 0; i < la.b.numel(); ++i) fn(la.b.data[i], lb.b.data[i]);
    }
}

inline std::vector<double> flatten(const ParamSet& p) {
    std::vector<double> out;
    out.reserve(p.numel());
    for_each_entry(p, [&](double v) { out.push_back(v); });
    return out;
}

inline double squared_norm(const ParamSet& p) {
    double s = 0.0;
    for_each_entry(p, [&](double v) { s += v * v; });
    return s;
}

// Xavier-uniform weights, zero biases, deterministic per seed.
inline Params init_params(const MlpSpec& spec, std::uint64_t seed) {
    Params p = ParamSet::zeros(spec);
    std::mt19937_64 rng(seed);
    for (auto& l : p.layers) {
        const double fan_in = static_cast<double>(l.w.cols());
        const double fan_out = static_cast<double>(l.w.rows());
        const double s = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-s, s);
        for (double& v : l.w.data) v = dist(rng);
    }
    return p;
}

inline double activate(Activation a, double z) {
    switch (a) {
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
        case Activation::Tanh: return std::tanh(z);
        case Activation::Relu: return z > 0.0 ? z : 0.0;
    }
    throw std::logic_error("unknown activation");
}

inline double activate_deriv(Activation a, double z) {
    switch (a) {
        case Activation::Sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-z));
            return s * (1.0 - s);
        }
        case Activation::Tanh: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
        case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
    }
    throw std::logic_error("unknown activation");
}

struct ForwardTrace {
    std::vector<Tensor> pre_activations;  // one per layer
    std::vector<Tensor> activations;      // input, then one per hidden layer
    Tensor logits;
    Tensor probabilities;
};

inline Tensor softmax(const Tensor& logits) {
    Tensor p = logits;
    const double mx = *std::max_element(p.data.begin(), p.data.end());
    double sum = 0.0;
    for (double& v : p.data) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : p.data) v /= sum;
    return p;
}

inline ForwardTrace forward(const MlpSpec& spec, const Params& params, const Tensor& x) {
    if (x.numel() != spec.input_dim())
        throw std::invalid_argument("forward: input length does not match spec");
    ForwardTrace tr;
    tr.activations.push_back(x);
    Tensor a = x;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& lt = params.layers[l];
        Tensor z({lt.w.rows()});
        for (std::size_t i = 0; i < lt.w.rows(); ++i) {
            double s = lt.b(i);
            for (std::size_t j = 0; j < lt.w.cols(); ++j) s += lt.w(i, j) * a(j);
            z(i) = s;
        }
        tr.pre_activations.push_back(z);
        if (l + 1 < params.layers.size()) {
            Tensor act({z.numel()});
            for (std::size_t i = 0; i < z.numel(); ++i) act(i) = activate(spec.activation, z(i));
            tr.activations.push_back(act);
            a = act;
        } else {
            tr.logits = z;
        }
    }
    tr.probabilities = softmax(tr.logits);
    require_finite(tr.probabilities, "forward probabilities");
    return tr;
}

struct LossGrad {
    double loss;
    GradientSet grads;
    ForwardTrace trace;
};

// Softmax cross-entropy loss and full backpropagated gradient for one sample.
inline LossGrad loss_and_grad(const MlpSpec& spec, const Params& params, const Tensor& x,
                              std::size_t label) {
    if (label >= spec.class_count())
        throw std::invalid_argument("loss_and_grad: label out of range");
    LossGrad out;
    out.trace = forward(spec, params, x);
    out.loss = -std::log(out.trace.probabilities(label));
    out.grads = ParamSet::zeros(spec);

    // delta at the logits: p - onehot(label)
    Tensor delta = out.trace.probabilities;
    delta(label) -= 1.0;

    for (std::size_t l = params.layers.size(); l-- > 0;) {
        const auto& lt = params.layers[l];
        auto& gl = out.grads.layers[l];
        const Tensor& a_in = out.trace.activations[l];
        for (std::size_t i = 0; i < lt.w.rows(); ++i) {
            gl.b(i) = delta(i);
            for (std::size_t j = 0; j < lt.w.cols(); ++j) gl.w(i, j) = delta(i) * a_in(j);
        }
        if (l > 0) {
            const Tensor& z_prev = out.trace.pre_activations[l - 1];
            Tensor prev({lt.w.cols()});
            for (std::size_t j = 0; j < lt.w.cols(); ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < lt.w.rows(); ++i) s += lt.w(i, j) * delta(i);
                prev(j) = s * activate_deriv(spec.activation, z_prev(j));
            }
            delta = prev;
        }
    }
    return out;
}

struct Sample {
    Tensor x;
    std::size_t label;
};
using Dataset = std::vector<Sample>;

// Mean loss and mean gradient over a batch, reduced in index order.
inline std::pair<double, GradientSet> batch_loss_and_grad(const MlpSpec& spec,
                                                          const Params& params,
                                                          const Dataset& batch) {
    if (batch.empty()) throw std::invalid_argument("batch_loss_and_grad: empty batch");
    double loss = 0.0;
    GradientSet acc = ParamSet::zeros(spec);
    for (const Sample& s : batch) {
        LossGrad lg = loss_and_grad(spec, params, s.x, s.label);
        loss += lg.loss;
        for_each_pair(acc, lg.grads, [](double& a, double g) { a += g; });
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    loss *= inv;
    for_each_entry(acc, [&](double& v) { v *= inv; });
    return {loss, std::move(acc)};
}

// Central-difference gradient of the single-sample loss, one coordinate at a time.
inline GradientSet finite_diff_gradient(const MlpSpec& spec, const Params& params,
                                        const Tensor& x, std::size_t label, double h) {
    if (h <= 0.0) throw std::invalid_argument("finite_diff_gradient: h must be positive");
    GradientSet g = ParamSet::zeros(spec);
    Params work = params;
    for (std::size_t l = 0; l < work.layers.size(); ++l) {
        auto probe = [&](Tensor& t, Tensor& gt) {
            for (std::size_t i = 0; i < t.numel(); ++i) {
                const double orig = t(i);
                t(i) = orig + h;
                const double lp = loss_and_grad(spec, work, x, label).loss;
                t(i) = orig - h;
                const double lm = loss_and_grad(spec, work, x, label).loss;
                t(i) = orig;
                gt(i) = (lp - lm) / (2.0 * h);
            }
        };
        probe(work.layers[l].w, g.layers[l].w);
        probe(work.layers[l].b, g.layers[l].b);
    }
    return g;
}

inline Params sgd_step(const Params& params, const GradientSet& grads, double lr) {
    if (lr < 0.0) throw std::invalid_argument("sgd_step: negative learning rate");
    require_congruent(params, grads, "sgd_step");
    Params out = params;
    for_each_pair(out, grads, [&](double& p, double g) { p -= lr * g; });
    return out;
}

inline std::size_t predict(const MlpSpec& spec, const Params& params, const Tensor& x) {
    const ForwardTrace tr = forward(spec, params, x);
    return static_cast<std::size_t>(
        std::max_element(tr.probabilities.data.begin(), tr.probabilities.data.end()) -
        tr.probabilities.data.begin());
}

inline double accuracy(const MlpSpec& spec, const Params& params, const Dataset& data) {
    if (data.empty()) return 0.0;
    std::size_t hits = 0;
    for (const Sample& s : data)
        if (predict(spec, params, s.x) == s.label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace ada
