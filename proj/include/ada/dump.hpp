#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ada/fedsim.hpp"
#include "ada/nn.hpp"

namespace ada {

// Little-endian binary gradient dump:
//   magic "ADAGDMP1" | u32 version | u64 spec hash | u32 round |
//   u32 client id | u32 transform kind | u32 layer count |
//   per layer: u32 out, u32 in, f64 weights (out*in), f64 biases (out)
struct GradientDump {
    std::uint64_t spec_hash = 0;
    std::uint32_t round = 0;
    std::uint32_t client_id = 0;
    std::uint32_t transform_kind = 0;
    GradientSet grads;
};

namespace detail {
constexpr std::array<char, 8> kDumpMagic = {'A', 'D', 'A', 'G', 'D', 'M', 'P', '1'};
constexpr std::array<char, 8> kSampleMagic = {'A', 'D', 'A', 'S', 'M', 'P', 'L', '1'};
constexpr std::uint32_t kDumpVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
        throw std::runtime_error(std::string("truncated dump while reading ") + what);
    return v;
}
}  // namespace detail

inline std::uint64_t spec_hash(const MlpSpec& spec) {
    // FNV-1a over layer sizes and the activation tag
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](std::uint64_t v) {
        h ^= v;
        h *= 1099511628211ull;
    };
    for (std::size_t s : spec.layer_sizes) mix(s);
    mix(static_cast<std::uint64_t>(spec.activation) + 0x100);
    return h;
}

inline void write_gradient_dump(const GradientDump& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_gradient_dump: cannot open " + path);
    out.write(detail::kDumpMagic.data(), detail::kDumpMagic.size());
    detail::write_pod(out, detail::kDumpVersion);
    detail::write_pod(out, d.spec_hash);
    detail::write_pod(out, d.round);
    detail::write_pod(out, d.client_id);
    detail::write_pod(out, d.transform_kind);
    detail::write_pod(out, static_cast<std::uint32_t>(d.grads.layers.size()));
    for (const auto& l : d.grads.layers) {
        detail::write_pod(out, static_cast<std::uint32_t>(l.w.rows()));
        detail::write_pod(out, static_cast<std::uint32_t>(l.w.cols()));
        out.write(reinterpret_cast<const char*>(l.w.data.data()),
                  static_cast<std::streamsize>(l.w.numel() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(l.b.data.data()),
                  static_cast<std::streamsize>(l.b.numel() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("write_gradient_dump: write failed for " + path);
}

inline GradientDump read_gradient_dump(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_gradient_dump: cannot open " + path);
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != detail::kDumpMagic)
        throw std::runtime_error("read_gradient_dump: bad magic in " + path);
    if (detail::read_pod<std::uint32_t>(in, "version") != detail::kDumpVersion)
        throw std::runtime_error("read_gradient_dump: unsupported version");
    GradientDump d;
    d.spec_hash = detail::read_pod<std::uint64_t>(in, "spec hash");
    d.round = detail::read_pod<std::uint32_t>(in, "round");
    d.client_id = detail::read_pod<std::uint32_t>(in, "client id");
    d.transform_kind = detail::read_pod<std::uint32_t>(in, "transform kind");
    const std::uint32_t n_layers = detail::read_pod<std::uint32_t>(in, "layer count");
    d.grads.layers.resize(n_layers);
    for (auto& l : d.grads.layers) {
        const std::uint32_t rows = detail::read_pod<std::uint32_t>(in, "rows");
        const std::uint32_t cols = detail::read_pod<std::uint32_t>(in, "cols");
        l.w = Tensor({rows, cols});
        l.b = Tensor({rows});
        if (!in.read(reinterpret_cast<char*>(l.w.data.data()),
                     static_cast<std::streamsize>(l.w.numel() * sizeof(double))) ||
            !in.read(reinterpret_cast<char*>(l.b.data.data()),
                     static_cast<std::streamsize>(l.b.numel() * sizeof(double))))
            throw std::runtime_error("read_gradient_dump: truncated tensor data");
    }
    return d;
}

// Ground-truth sample file (for attack evaluation):
//   magic "ADASMPL1" | u32 ndim | u32 dims... | u32 label | f64 values
inline void write_sample(const Sample& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_sample: cannot open " + path);
    out.write(detail::kSampleMagic.data(), detail::kSampleMagic.size());
    detail::write_pod(out, static_cast<std::uint32_t>(s.x.shape.size()));
    for (std::size_t d : s.x.shape) detail::write_pod(out, static_cast<std::uint32_t>(d));
    detail::write_pod(out, static_cast<std::uint32_t>(s.label));
    out.write(reinterpret_cast<const char*>(s.x.data.data()),
              static_cast<std::streamsize>(s.x.numel() * sizeof(double)));
    if (!out) throw std::runtime_error("write_sample: write failed for " + path);
}

inline Sample read_sample(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_sample: cannot open " + path);
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != detail::kSampleMagic)
        throw std::runtime_error("read_sample: bad magic in " + path);
    const std::uint32_t ndim = detail::read_pod<std::uint32_t>(in, "ndim");
    std::vector<std::size_t> shape(ndim);
    for (auto& d : shape) d = detail::read_pod<std::uint32_t>(in, "dim");
    Sample s;
    s.label = detail::read_pod<std::uint32_t>(in, "label");
    s.x = Tensor(shape);
    if (!in.read(reinterpret_cast<char*>(s.x.data.data()),
                 static_cast<std::streamsize>(s.x.numel() * sizeof(double))))
        throw std::runtime_error("read_sample: truncated data");
    return s;
}

// Wire form of the client->server message: client id, sample count and
// the payload tensors. Nothing else crosses the boundary.
inline std::vector<std::uint8_t> serialize_message(const StandinMessage& msg) {
    std::vector<std::uint8_t> out;
    auto put = [&](const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out.insert(out.end(), b, b + n);
    };
    const std::uint32_t id = static_cast<std::uint32_t>(msg.client_id);
    put(&id, sizeof(id));
    put(&msg.sample_count, sizeof(msg.sample_count));
    for (const auto& l : msg.payload.layers) {
        put(l.w.data.data(), l.w.numel() * sizeof(double));
        put(l.b.data.data(), l.b.numel() * sizeof(double));
    }
    return out;
}

// Exact size of a serialized message: header fields plus payload doubles.
inline std::size_t serialized_message_size(const StandinMessage& msg) {
    return sizeof(std::uint32_t) + sizeof(std::uint64_t) +
           msg.payload.numel() * sizeof(double);
}

}  // namespace ada
