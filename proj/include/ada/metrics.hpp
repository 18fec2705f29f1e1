#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ada/tensor.hpp"

namespace ada {

struct ImagePair {
    Tensor reference;
    Tensor candidate;
    double value_range = 255.0;  // max intensity (255 for IDX, 1.0 for synthetic)

    void validate() const {
        if (!reference.same_shape(candidate))
            throw std::invalid_argument("ImagePair: shape mismatch");
        if (value_range <= 0.0) throw std::invalid_argument("ImagePair: value_range must be > 0");
    }
};

inline double mse(const ImagePair& pair) {
    pair.validate();
    double s = 0.0;
    for (std::size_t i = 0; i < pair.reference.numel(); ++i) {
        const double d = pair.reference.data[i] - pair.candidate.data[i];
        s += d * d;
    }
    return s / static_cast<double>(pair.reference.numel());
}

inline double psnr(const ImagePair& pair) {
    const double m = mse(pair);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(pair.value_range * pair.value_range / m);
}

// Mean local SSIM over uniform square sliding windows (stride 1).
inline double ssim(const ImagePair& pair, std::size_t window = 8, double k1 = 0.01,
                   double k2 = 0.03) {
    pair.validate();
    if (pair.reference.shape.size() != 2 || pair.reference.rows() != pair.reference.cols())
        throw std::invalid_argument("ssim: square 2-D images required");
    const std::size_t n = pair.reference.rows();
    if (n < window) throw std::invalid_argument("ssim: image smaller than window");

    const double c1 = (k1 * pair.value_range) * (k1 * pair.value_range);
    const double c2 = (k2 * pair.value_range) * (k2 * pair.value_range);
    const double inv_w = 1.0 / static_cast<double>(window * window);

    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t r0 = 0; r0 + window <= n; ++r0) {
        for (std::size_t c0 = 0; c0 + window <= n; ++c0) {
            double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
            for (std::size_t i = 0; i < window; ++i)
                for (std::size_t j = 0; j < window; ++j) {
                    const double x = pair.reference(r0 + i, c0 + j);
                    const double y = pair.candidate(r0 + i, c0 + j);
                    sx += x;
                    sy += y;
                    sxx += x * x;
                    syy += y * y;
                    sxy += x * y;
                }
            const double mx = sx * inv_w, my = sy * inv_w;
            const double vx = sxx * inv_w - mx * mx;
            const double vy = syy * inv_w - my * my;
            const double cov = sxy * inv_w - mx * my;
            total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                     ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

}  // namespace ada
