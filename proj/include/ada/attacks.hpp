#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "ada/nn.hpp"

namespace ada {

// Closed-form batch-1 input recovery from an input-facing affine layer:
// gradW = delta * x^T and gradb = delta, so any row with gradb != 0
// yields x. Picks the best-conditioned row.
inline Tensor analytic_fc_reconstruct(const Tensor& grad_w, const Tensor& grad_b) {
    if (grad_w.shape.size() != 2 || grad_b.shape.size() != 1 ||
        grad_w.rows() != grad_b.numel())
        throw std::invalid_argument("analytic_fc_reconstruct: incompatible shapes");
    std::size_t best = 0;
    double best_abs = 0.0;
    for (std::size_t i = 0; i < grad_b.numel(); ++i) {
        const double a = std::abs(grad_b(i));
        if (a > best_abs) {
            best_abs = a;
            best = i;
        }
    }
    if (best_abs < 1e-12)
        throw std::runtime_error("analytic_fc_reconstruct: no usable row");
    Tensor x({grad_w.cols()});
    for (std::size_t j = 0; j < grad_w.cols(); ++j) x(j) = grad_w(best, j) / grad_b(best);
    return x;
}

// Frobenius-relative residual of the best rank-1 approximation,
// top singular triplet found by power iteration.
inline double rank1_residual(const Tensor& a) {
    if (a.shape.size() != 2 || a.rows() < 2 || a.cols() < 2)
        throw std::invalid_argument("rank1_residual: need a matrix with >= 2 rows and cols");
    const double fro2 = squared_norm(a);
    if (fro2 == 0.0) return 0.0;

    const std::size_t rows = a.rows(), cols = a.cols();
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> v(cols), u(rows);
    for (double& x : v) x = dist(rng);

    double sigma = 0.0;
    for (int it = 0; it < 500; ++it) {
        // u = A v
        for (std::size_t i = 0; i < rows; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < cols; ++j) s += a(i, j) * v[j];
            u[i] = s;
        }
        double un = 0.0;
        for (double x : u) un += x * x;
        un = std::sqrt(un);
        if (un == 0.0) break;
        for (double& x : u) x /= un;
        // v = A^T u
        for (std::size_t j = 0; j < cols; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < rows; ++i) s += a(i, j) * u[i];
            v[j] = s;
        }
        double vn = 0.0;
        for (double x : v) vn += x * x;
        vn = std::sqrt(vn);
        if (vn == 0.0) break;
        for (double& x : v) x /= vn;
        if (std::abs(vn - sigma) <= 1e-10 * std::max(1.0, vn)) {
            sigma = vn;
            break;
        }
        sigma = vn;
    }
    // ||A - sigma u v^T||_F^2 = ||A||_F^2 - sigma^2 for the top triplet
    double res2 = 0.0;
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            const double d = a(i, j) - sigma * u[i] * v[j];
            res2 += d * d;
        }
    return std::sqrt(res2 / fro2);
}

// iDLG rule: under softmax cross-entropy with batch 1, the true label is
// the unique class with a negative last-layer bias gradient.
inline std::size_t infer_label_sign(const Tensor& grad_b_last) {
    std::size_t arg_min = 0;
    for (std::size_t i = 0; i < grad_b_last.numel(); ++i)
        if (grad_b_last(i) < grad_b_last(arg_min)) arg_min = i;
    return arg_min;
}

enum class DistanceKind { L2, CosineSim };

inline double gradient_distance(const GradientSet& a, const GradientSet& b, DistanceKind kind) {
    require_congruent(a, b, "gradient_distance");
    if (kind == DistanceKind::L2) {
        double s = 0.0;
        for (std::size_t l = 0; l < a.layers.size(); ++l) {
            auto add = [&](const Tensor& ta, const Tensor& tb) {
                for (std::size_t i = 0; i < ta.numel(); ++i) {
                    const double d = ta(i) - tb(i);
                    s += d * d;
                }
            };
            add(a.layers[l].w, b.layers[l].w);
            add(a.layers[l].b, b.layers[l].b);
        }
        return s;
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        auto add = [&](const Tensor& ta, const Tensor& tb) {
            for (std::size_t i = 0; i < ta.numel(); ++i) {
                dot += ta(i) * tb(i);
                na += ta(i) * ta(i);
                nb += tb(i) * tb(i);
            }
        };
        add(a.layers[l].w, b.layers[l].w);
        add(a.layers[l].b, b.layers[l].b);
    }
    if (na == 0.0 || nb == 0.0)
        throw std::invalid_argument("gradient_distance: undefined direction for zero vector");
    return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

struct AttackConfig {
    DistanceKind distance = DistanceKind::L2;
    int iterations = 2000;
    double step_size = 0.1;
    std::uint64_t seed = 0;
    double finite_diff_h = 1e-4;

    void validate() const {
        if (iterations < 1) throw std::invalid_argument("attack iterations must be >= 1");
        if (step_size <= 0.0) throw std::invalid_argument("attack step_size must be > 0");
        if (finite_diff_h <= 0.0) throw std::invalid_argument("finite_diff_h must be > 0");
    }
};

struct AttackReport {
    Tensor reconstructed;
    std::size_t inferred_label = 0;
    std::vector<double> objective_trace;
    double final_objective = 0.0;
};

// DLG/IG-style gradient matching: descend the distance between induced
// and target gradients over the dummy input, input-gradient by central
// finite differences, step acceptance with backtracking halving.
inline AttackReport grad_match_attack(const GradientSet& target, const MlpSpec& spec,
                                      const Params& params, const AttackConfig& cfg,
                                      std::optional<std::size_t> true_label = std::nullopt,
                                      std::optional<Tensor> init = std::nullopt) {
    cfg.validate();
    const std::size_t dim = spec.input_dim();
    if (dim > 256)
        throw std::invalid_argument("grad_match_attack: input dimension over budget (256)");

    AttackReport report;
    report.inferred_label =
        true_label ? *true_label : infer_label_sign(target.layers.back().b);
    const std::size_t label = report.inferred_label;

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    Tensor x({dim});
    if (init) {
        if (init->numel() != dim)
            throw std::invalid_argument("grad_match_attack: bad init shape");
        x = *init;
    } else {
        for (double& v : x.data) v = dist(rng);
    }

    auto objective = [&](const Tensor& cand) {
        return gradient_distance(loss_and_grad(spec, params, cand, label).grads, target,
                                 cfg.distance);
    };

    double cur = objective(x);
    if (!std::isfinite(cur))
        throw std::runtime_error("grad_match_attack: non-finite objective at start");
    double step = cfg.step_size;
    Tensor grad({dim});

    for (int it = 0; it < cfg.iterations; ++it) {
        for (std::size_t j = 0; j < dim; ++j) {
            const double orig = x(j);
            x(j) = orig + cfg.finite_diff_h;
            const double fp = objective(x);
            x(j) = orig - cfg.finite_diff_h;
            const double fm = objective(x);
            x(j) = orig;
            grad(j) = (fp - fm) / (2.0 * cfg.finite_diff_h);
        }
        bool accepted = false;
        for (int bt = 0; bt < 40 && step > 1e-14; ++bt) {
            Tensor cand = x;
            for (std::size_t j = 0; j < dim; ++j) cand(j) -= step * grad(j);
            const double co = objective(cand);
            if (!std::isfinite(co))
                throw std::runtime_error("grad_match_attack: non-finite objective");
            if (co <= cur) {
                x = cand;
                cur = co;
                step *= 1.5;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        report.objective_trace.push_back(cur);
        if (!accepted && step <= 1e-14) break;
        if (cur < 1e-24) break;
    }

    report.reconstructed = x;
    report.final_objective = cur;
    return report;
}

}  // namespace ada
