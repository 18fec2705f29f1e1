#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ada/nn.hpp"

namespace ada {

namespace detail {
inline std::uint32_t read_be32(std::istream& in, const char* what) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4))
        throw std::runtime_error(std::string("truncated file while reading ") + what);
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}
}  // namespace detail

// IDX (MNIST) loader. Pixels stay in [0,255]. Images come back as
// [rows x cols] tensors paired with their labels.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("load_idx: cannot open " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("load_idx: cannot open " + labels_path);

    if (detail::read_be32(img, "image magic") != 0x00000803u)
        throw std::runtime_error("load_idx: bad magic in image file");
    const std::uint32_t n_img = detail::read_be32(img, "image count");
    const std::uint32_t rows = detail::read_be32(img, "rows");
    const std::uint32_t cols = detail::read_be32(img, "cols");

    if (detail::read_be32(lab, "label magic") != 0x00000801u)
        throw std::runtime_error("load_idx: bad magic in label file");
    const std::uint32_t n_lab = detail::read_be32(lab, "label count");
    if (n_img != n_lab) throw std::runtime_error("load_idx: count mismatch between files");

    Dataset out;
    out.reserve(n_img);
    std::vector<unsigned char> px(static_cast<std::size_t>(rows) * cols);
    for (std::uint32_t k = 0; k < n_img; ++k) {
        if (!img.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size())))
            throw std::runtime_error("load_idx: truncated image data");
        int label = lab.get();
        if (label == EOF) throw std::runtime_error("load_idx: truncated label data");
        Sample s;
        s.x = Tensor({rows, cols});
        for (std::size_t i = 0; i < px.size(); ++i) s.x.data[i] = static_cast<double>(px[i]);
        s.label = static_cast<std::size_t>(label);
        out.push_back(std::move(s));
    }
    return out;
}

// Gaussian blobs with class centers on scaled unit axes (pairwise center
// distance 2 for distinct axes). Supports up to 2*dims classes.
inline Dataset gen_blobs(std::size_t n_per_class, std::size_t dims, std::size_t classes,
                         double spread, std::uint64_t seed) {
    if (classes < 2) throw std::invalid_argument("gen_blobs: classes must be >= 2");
    if (classes > 2 * dims) throw std::invalid_argument("gen_blobs: too many classes for dims");
    if (spread < 0.0) throw std::invalid_argument("gen_blobs: spread must be >= 0");
    const double scale = std::sqrt(2.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    Dataset out;
    out.reserve(n_per_class * classes);
    for (std::size_t c = 0; c < classes; ++c) {
        const std::size_t axis = c % dims;
        const double sign = c < dims ? 1.0 : -1.0;
        for (std::size_t k = 0; k < n_per_class; ++k) {
            Sample s;
            s.x = Tensor({dims});
            for (std::size_t j = 0; j < dims; ++j) s.x(j) = spread * noise(rng);
            s.x(axis) += sign * scale;
            s.label = c;
            out.push_back(std::move(s));
        }
    }
    return out;
}

// Non-overlapping k x k block means.
inline Tensor downsample(const Tensor& image, std::size_t k) {
    if (image.shape.size() != 2) throw std::invalid_argument("downsample: 2-D tensor required");
    if (k == 0 || image.rows() % k != 0 || image.cols() % k != 0)
        throw std::invalid_argument("downsample: dimensions not divisible by factor");
    const std::size_t r = image.rows() / k, c = image.cols() / k;
    Tensor out({r, c});
    const double inv = 1.0 / static_cast<double>(k * k);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            double s = 0.0;
            for (std::size_t di = 0; di < k; ++di)
                for (std::size_t dj = 0; dj < k; ++dj) s += image(i * k + di, j * k + dj);
            out(i, j) = s * inv;
        }
    return out;
}

// Binary PGM (P5, maxval 255). Pixels are scaled from [0, value_range]
// and clamped.
inline void write_pgm(const Tensor& image, double value_range, const std::string& path) {
    if (image.shape.size() != 2) throw std::invalid_argument("write_pgm: 2-D tensor required");
    if (value_range <= 0.0) throw std::invalid_argument("write_pgm: value_range must be > 0");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_pgm: cannot open " + path);
    out << "P5\n" << image.cols() << " " << image.rows() << "\n255\n";
    for (double v : image.data) {
        const double scaled = std::round(v / value_range * 255.0);
        const int q = static_cast<int>(std::clamp(scaled, 0.0, 255.0));
        out.put(static_cast<char>(q));
    }
    if (!out) throw std::runtime_error("write_pgm: write failed for " + path);
}

inline Tensor read_pgm(const std::string& path, double value_range = 255.0) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_pgm: cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw std::runtime_error("read_pgm: not a P5 file");
    std::size_t cols = 0, rows = 0;
    int maxval = 0;
    in >> cols >> rows >> maxval;
    if (maxval != 255) throw std::runtime_error("read_pgm: unsupported maxval");
    in.get();  // single whitespace after header
    Tensor img({rows, cols});
    for (double& v : img.data) {
        const int byte = in.get();
        if (byte == EOF) throw std::runtime_error("read_pgm: truncated pixel data");
        v = static_cast<double>(byte) / 255.0 * value_range;
    }
    return img;
}

}  // namespace ada
