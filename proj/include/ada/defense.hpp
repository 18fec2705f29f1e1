#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "ada/nn.hpp"

namespace ada {

// Per-client Adam moment accumulators. Never leaves the client.
struct MomentState {
    GradientSet m;
    GradientSet v;
    std::uint64_t round = 0;  // number of stand-in calls performed so far
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static MomentState zeros_like(const ParamSet& shape) {
        MomentState s;
        s.m = shape;
        s.v = shape;
        for_each_entry(s.m, [](double& x) { x = 0.0; });
        for_each_entry(s.v, [](double& x) { x = 0.0; });
        return s;
    }
};

// One Adam moment step on the round gradient; returns the stand-in
// g_hat = m_hat / (sqrt(v_hat) + eps) and advances the state.
inline GradientSet standin_update(MomentState& state, const GradientSet& g) {
    require_congruent(state.m, g, "standin_update");
    state.round += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.round));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.round));

    GradientSet out = g;
    for (std::size_t l = 0; l < g.layers.size(); ++l) {
        auto step = [&](const Tensor& gt, Tensor& mt, Tensor& vt, Tensor& ot) {
            for (std::size_t i = 0; i < gt.numel(); ++i) {
                mt(i) = b1 * mt(i) + (1.0 - b1) * gt(i);
                vt(i) = b2 * vt(i) + (1.0 - b2) * gt(i) * gt(i);
                const double m_hat = mt(i) / c1;
                const double v_hat = vt(i) / c2;
                ot(i) = m_hat / (std::sqrt(v_hat) + state.eps);
            }
        };
        step(g.layers[l].w, state.m.layers[l].w, state.v.layers[l].w, out.layers[l].w);
        step(g.layers[l].b, state.m.layers[l].b, state.v.layers[l].b, out.layers[l].b);
    }
    return out;
}

// Diagonal of d(g_hat)/dg for the stand-in call that `state_before` would
// perform on g. Does not mutate the state.
inline GradientSet exact_standin_jacobian(const MomentState& state_before, const GradientSet& g) {
    require_congruent(state_before.m, g, "exact_standin_jacobian");
    const double b1 = state_before.beta1, b2 = state_before.beta2, eps = state_before.eps;
    const std::uint64_t r = state_before.round + 1;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(r));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(r));

    GradientSet out = g;
    for (std::size_t l = 0; l < g.layers.size(); ++l) {
        auto diag = [&](const Tensor& gt, const Tensor& mt, const Tensor& vt, Tensor& ot) {
            for (std::size_t i = 0; i < gt.numel(); ++i) {
                const double gi = gt(i);
                const double m = b1 * mt(i) + (1.0 - b1) * gi;
                const double v = b2 * vt(i) + (1.0 - b2) * gi * gi;
                const double m_hat = m / c1;
                const double v_hat = v / c2;
                const double root = std::sqrt(v_hat);
                const double z = root + eps;
                const double first = ((1.0 - b1) / c1) / z;
                double second = 0.0;
                if (gi != 0.0) {
                    if (root == 0.0)
                        throw std::logic_error("exact_standin_jacobian: v_hat = 0 with g != 0");
                    second = m_hat * (1.0 - b2) * gi / (root * c2 * z * z);
                }
                ot(i) = first - second;
            }
        };
        diag(g.layers[l].w, state_before.m.layers[l].w, state_before.v.layers[l].w,
             out.layers[l].w);
        diag(g.layers[l].b, state_before.m.layers[l].b, state_before.v.layers[l].b,
             out.layers[l].b);
    }
    return out;
}

// The simplified derivative -beta1*m_{r-1} / (alpha*(1-beta1^r)*g^2).
// Coordinates with g = 0 are reported as NaN (undefined) and must be
// excluded from comparisons.
inline GradientSet approx_standin_jacobian(const MomentState& state_before, const GradientSet& g,
                                           double alpha) {
    if (alpha <= 0.0) throw std::invalid_argument("approx_standin_jacobian: alpha must be > 0");
    require_congruent(state_before.m, g, "approx_standin_jacobian");
    const double b1 = state_before.beta1;
    const std::uint64_t r = state_before.round + 1;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(r));

    GradientSet out = g;
    for (std::size_t l = 0; l < g.layers.size(); ++l) {
        auto diag = [&](const Tensor& gt, const Tensor& mt, Tensor& ot) {
            for (std::size_t i = 0; i < gt.numel(); ++i) {
                const double gi = gt(i);
                if (gi == 0.0) {
                    ot(i) = std::numeric_limits<double>::quiet_NaN();
                } else {
                    ot(i) = -b1 * mt(i) / (alpha * c1 * gi * gi);
                }
            }
        };
        diag(g.layers[l].w, state_before.m.layers[l].w, out.layers[l].w);
        diag(g.layers[l].b, state_before.m.layers[l].b, out.layers[l].b);
    }
    return out;
}

// Empirical scaling factor alpha = (sqrt(v_hat)+eps)/|g| at round r, where
// v_hat is formed from the state's second moment and g. Median over
// nonzero coordinates.
inline double approximation_alpha(const MomentState& state, const GradientSet& g,
                                  std::uint64_t r) {
    require_congruent(state.v, g, "approximation_alpha");
    if (r < 1) throw std::invalid_argument("approximation_alpha: r must be >= 1");
    const double b2 = state.beta2;
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(r));
    std::vector<double> ratios;
    for (std::size_t l = 0; l < g.layers.size(); ++l) {
        auto collect = [&](const Tensor& gt, const Tensor& vt) {
            for (std::size_t i = 0; i < gt.numel(); ++i) {
                const double gi = gt(i);
                if (gi == 0.0) continue;
                const double v = b2 * vt(i) + (1.0 - b2) * gi * gi;
                const double root = std::sqrt(v / c2);
                ratios.push_back((root + state.eps) / std::abs(gi));
            }
        };
        collect(g.layers[l].w, state.v.layers[l].w);
        collect(g.layers[l].b, state.v.layers[l].b);
    }
    if (ratios.empty()) throw std::invalid_argument("approximation_alpha: all-zero gradient");
    std::nth_element(ratios.begin(), ratios.begin() + ratios.size() / 2, ratios.end());
    return ratios[ratios.size() / 2];
}

inline GradientSet noise_transform(const GradientSet& g, double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw std::invalid_argument("noise_transform: sigma must be >= 0");
    GradientSet out = g;
    if (sigma == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, sigma);
    for_each_entry(out, [&](double& v) { v += dist(rng); });
    return out;
}

inline GradientSet clip_transform(const GradientSet& g, double c) {
    if (c <= 0.0) throw std::invalid_argument("clip_transform: c must be > 0");
    const double norm = std::sqrt(squared_norm(g));
    GradientSet out = g;
    if (norm > c) {
        const double scale = c / norm;
        for_each_entry(out, [&](double& v) { v *= scale; });
    }
    return out;
}

struct Transform {
    enum class Kind { Identity, AdaDefense, GaussianNoise, Clip };
    Kind kind = Kind::Identity;
    double sigma = 0.1;  // GaussianNoise
    double clip = 1.0;   // Clip
};

inline GradientSet apply_transform(const Transform& t, MomentState& moment, const GradientSet& g,
                                   std::uint64_t noise_seed) {
    switch (t.kind) {
        case Transform::Kind::Identity: return g;
        case Transform::Kind::AdaDefense: return standin_update(moment, g);
        case Transform::Kind::GaussianNoise: return noise_transform(g, t.sigma, noise_seed);
        case Transform::Kind::Clip: return clip_transform(g, t.clip);
    }
    throw std::logic_error("unknown transform kind");
}

}  // namespace ada
