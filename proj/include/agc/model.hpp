#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "agc/bytes.hpp"
#include "agc/errors.hpp"
#include "agc/hash.hpp"

namespace agc {

struct Shape {
    size_t h = 1, w = 1, c = 1;
    size_t count() const { return h * w * c; }
    bool operator==(const Shape&) const = default;
};

enum class LayerKind : uint8_t { dense = 1, conv2d = 2, relu = 3, scale = 4 };

inline const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::dense: return "dense";
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::relu: return "relu";
        case LayerKind::scale: return "scale";
    }
    return "?";
}

struct LayerDescriptor {
    LayerKind kind = LayerKind::relu;
    size_t outputs = 0;                              // dense
    size_t in_ch = 0, out_ch = 0, filter = 0, stride = 1;  // conv2d
    uint64_t scale_factor = 0;                       // scale

    bool is_linear() const { return kind == LayerKind::dense || kind == LayerKind::conv2d; }
};

// Valid (unpadded) convolution geometry plus the im2col index map shared by
// the plaintext and garbled evaluation paths. Tensors are flattened
// height-major with channels innermost: index = (y*w + x)*c + ch.
struct ConvGeom {
    size_t in_h, in_w, in_ch;
    size_t out_ch, filter, stride;
    size_t out_h, out_w;

    ConvGeom(Shape in, const LayerDescriptor& d)
        : in_h(in.h), in_w(in.w), in_ch(in.c), out_ch(d.out_ch), filter(d.filter),
          stride(d.stride) {
        require(d.kind == LayerKind::conv2d, Errc::shape_mismatch, "not a conv layer");
        require(in.c == d.in_ch, Errc::shape_mismatch, "conv input channels mismatch");
        require(filter >= 1 && stride >= 1, Errc::shape_mismatch, "bad conv params");
        require(in_h >= filter && in_w >= filter, Errc::shape_mismatch,
                "conv filter larger than input");
        out_h = (in_h - filter) / stride + 1;
        out_w = (in_w - filter) / stride + 1;
    }

    size_t patch() const { return filter * filter * in_ch; }
    size_t pixels() const { return out_h * out_w; }
    Shape out_shape() const { return {out_h, out_w, out_ch}; }

    // idx[col*patch + r] = flat input index feeding patch element r of output
    // pixel col. Weight matrices are laid out [out_ch][fy][fx][in_ch] so the
    // convolution becomes one (out_ch x patch) * (patch x pixels) product.
    std::vector<size_t> im2col_indices() const {
        std::vector<size_t> idx(pixels() * patch());
        size_t col = 0;
        for (size_t oy = 0; oy < out_h; ++oy)
            for (size_t ox = 0; ox < out_w; ++ox, ++col) {
                size_t r = 0;
                for (size_t fy = 0; fy < filter; ++fy)
                    for (size_t fx = 0; fx < filter; ++fx)
                        for (size_t ch = 0; ch < in_ch; ++ch, ++r) {
                            size_t y = oy * stride + fy;
                            size_t x = ox * stride + fx;
                            idx[col * patch() + r] = (y * in_w + x) * in_ch + ch;
                        }
            }
        return idx;
    }
};

// Shape flowing out of a layer; throws ShapeMismatch when the graph does not
// chain.
inline Shape layer_output_shape(const LayerDescriptor& d, Shape in) {
    switch (d.kind) {
        case LayerKind::dense:
            require(d.outputs > 0, Errc::shape_mismatch, "dense without outputs");
            return Shape{1, 1, d.outputs};
        case LayerKind::conv2d:
            return ConvGeom(in, d).out_shape();
        case LayerKind::relu:
        case LayerKind::scale:
            return in;
    }
    fail(Errc::internal, "bad layer kind");
}

// Number of weights / biases a linear layer carries.
inline size_t layer_weight_count(const LayerDescriptor& d, Shape in) {
    if (d.kind == LayerKind::dense) return d.outputs * in.count();
    if (d.kind == LayerKind::conv2d) return d.out_ch * d.filter * d.filter * d.in_ch;
    return 0;
}

inline size_t layer_bias_count(const LayerDescriptor& d) {
    if (d.kind == LayerKind::dense) return d.outputs;
    if (d.kind == LayerKind::conv2d) return d.out_ch;
    return 0;
}

// ---------------------------------------------------------------------------
// Floating-point model + manifest
// ---------------------------------------------------------------------------

struct FloatLayer {
    LayerDescriptor desc;
    std::vector<double> weights;
    std::vector<double> bias;
};

struct FloatModel {
    std::string name;
    Shape input;
    std::vector<FloatLayer> layers;

    Shape output_shape() const {
        Shape s = input;
        for (const auto& l : layers) s = layer_output_shape(l.desc, s);
        return s;
    }
};

inline void validate_shapes(const FloatModel& m) { (void)m.output_shape(); }

// PyTorch-style uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] init for models
// without a weight blob.
inline void init_random_weights(FloatModel& m, uint64_t seed) {
    ByteWriter w;
    w.str("agc-weights");
    w.u64(seed);
    DetRng rng(w.data());
    auto uniform = [&rng](double lo, double hi) {
        double u = double(rng.next_u64() >> 11) / double(uint64_t(1) << 53);
        return lo + u * (hi - lo);
    };
    Shape s = m.input;
    for (auto& l : m.layers) {
        size_t nw = layer_weight_count(l.desc, s);
        size_t nb = layer_bias_count(l.desc);
        if (nw > 0) {
            size_t fan_in = l.desc.kind == LayerKind::dense
                                ? s.count()
                                : l.desc.filter * l.desc.filter * l.desc.in_ch;
            double bound = 1.0 / std::sqrt(double(fan_in));
            l.weights.resize(nw);
            l.bias.resize(nb);
            for (auto& v : l.weights) v = uniform(-bound, bound);
            for (auto& v : l.bias) v = uniform(-bound, bound);
        }
        s = layer_output_shape(l.desc, s);
    }
}

// Manifest: a JSON layer list next to a little-endian float32 weight blob.
inline FloatModel load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), Errc::io_error, "cannot open manifest " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail(Errc::io_error, "manifest parse error: " + std::string(e.what()));
    }

    FloatModel m;
    m.name = j.value("name", path.stem().string());
    auto in_shape = j.at("input");
    require(in_shape.is_array() && in_shape.size() == 3, Errc::shape_mismatch,
            "input must be [h, w, c]");
    m.input = Shape{in_shape[0].get<size_t>(), in_shape[1].get<size_t>(),
                    in_shape[2].get<size_t>()};

    for (const auto& jl : j.at("layers")) {
        FloatLayer l;
        std::string type = jl.at("type").get<std::string>();
        if (type == "dense") {
            l.desc.kind = LayerKind::dense;
            l.desc.outputs = jl.at("outputs").get<size_t>();
        } else if (type == "conv2d") {
            l.desc.kind = LayerKind::conv2d;
            l.desc.in_ch = jl.at("in_ch").get<size_t>();
            l.desc.out_ch = jl.at("out_ch").get<size_t>();
            l.desc.filter = jl.at("filter").get<size_t>();
            l.desc.stride = jl.value("stride", size_t(1));
        } else if (type == "relu") {
            l.desc.kind = LayerKind::relu;
        } else {
            fail(Errc::io_error, "unknown layer type '" + type + "'");
        }
        m.layers.push_back(std::move(l));
    }
    validate_shapes(m);

    if (j.contains("weights_file")) {
        auto wpath = path.parent_path() / j.at("weights_file").get<std::string>();
        std::ifstream wf(wpath, std::ios::binary);
        require(wf.good(), Errc::io_error, "cannot open weights " + wpath.string());
        std::vector<uint8_t> blob((std::istreambuf_iterator<char>(wf)),
                                  std::istreambuf_iterator<char>());
        ByteReader r(blob);
        Shape s = m.input;
        for (auto& l : m.layers) {
            size_t nw = layer_weight_count(l.desc, s);
            size_t nb = layer_bias_count(l.desc);
            l.weights.resize(nw);
            l.bias.resize(nb);
            for (auto& v : l.weights) {
                uint32_t bits = r.u32();
                float f;
                std::memcpy(&f, &bits, 4);
                v = f;
            }
            for (auto& v : l.bias) {
                uint32_t bits = r.u32();
                float f;
                std::memcpy(&f, &bits, 4);
                v = f;
            }
            s = layer_output_shape(l.desc, s);
        }
        require(r.done(), Errc::io_error, "weight blob larger than model");
    }
    return m;
}

inline void save_weights_blob(const FloatModel& m, const std::filesystem::path& path) {
    ByteWriter w;
    for (const auto& l : m.layers) {
        for (double v : l.weights) {
            float f = float(v);
            uint32_t bits;
            std::memcpy(&bits, &f, 4);
            w.u32(bits);
        }
        for (double v : l.bias) {
            float f = float(v);
            uint32_t bits;
            std::memcpy(&bits, &f, 4);
            w.u32(bits);
        }
    }
    std::ofstream out(path, std::ios::binary);
    require(out.good(), Errc::io_error, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(w.data().data()), std::streamsize(w.size()));
}

}  // namespace agc
