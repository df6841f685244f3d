#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "agc/model.hpp"
#include "agc/rns.hpp"

namespace agc {

enum class QuantScheme : uint8_t { simple = 1, scale = 2, scale_plus = 3 };

inline const char* quant_scheme_name(QuantScheme s) {
    switch (s) {
        case QuantScheme::simple: return "simple";
        case QuantScheme::scale: return "scale";
        case QuantScheme::scale_plus: return "scale-plus";
    }
    return "?";
}

struct QuantParams {
    QuantScheme scheme = QuantScheme::simple;
    double alpha = 0;           // simple: multiplier for all values
    uint32_t ell = 0;           // scale: exponent of 2^ell
    uint64_t scale_factor = 0;  // scale / scale_plus: per-layer rescale amount
    ScaleMode realization = ScaleMode::fused;

    // multiplier applied to inputs at inference time
    double input_constant() const {
        return scheme == QuantScheme::simple ? alpha : double(scale_factor);
    }
};

struct QuantLayer {
    LayerDescriptor desc;
    std::vector<int64_t> weights;
    std::vector<int64_t> bias;
};

struct QuantizedModel {
    std::string name;
    Shape input;
    RnsBase base;
    QuantParams params;
    std::vector<QuantLayer> layers;
    std::vector<size_t> scale_positions;  // indices of inserted scale layers

    Shape output_shape() const {
        Shape s = input;
        for (const auto& l : layers) s = layer_output_shape(l.desc, s);
        return s;
    }
};

// Fixed as round-half-away-from-zero for cross-platform determinism.
inline int64_t round_half_away(double v) { return std::llround(v); }

namespace detail {

inline int64_t quantize_checked(const RnsBase& base, double v, double mult) {
    double scaled = v * mult;
    require(std::isfinite(scaled), Errc::range_overflow, "non-finite quantized value");
    int64_t q = round_half_away(scaled);
    require(q >= base.min_signed() && q <= base.max_signed(), Errc::range_overflow,
            "quantized value " + std::to_string(q) + " outside signed range");
    return q;
}

inline QuantizedModel quantize_common(const FloatModel& m, const RnsBase& base,
                                      const QuantParams& params, double w_mult, double b_mult,
                                      bool insert_scale) {
    validate_shapes(m);
    QuantizedModel out;
    out.name = m.name;
    out.input = m.input;
    out.base = base;
    out.params = params;
    Shape s = m.input;
    for (const auto& l : m.layers) {
        require(l.weights.size() == layer_weight_count(l.desc, s) &&
                    l.bias.size() == layer_bias_count(l.desc),
                Errc::shape_mismatch, "layer weight count mismatch");
        QuantLayer ql;
        ql.desc = l.desc;
        ql.weights.reserve(l.weights.size());
        ql.bias.reserve(l.bias.size());
        for (double v : l.weights) ql.weights.push_back(quantize_checked(base, v, w_mult));
        for (double v : l.bias) ql.bias.push_back(quantize_checked(base, v, b_mult));
        bool linear = l.desc.is_linear();
        out.layers.push_back(std::move(ql));
        if (linear && insert_scale) {
            QuantLayer sc;
            sc.desc.kind = LayerKind::scale;
            sc.desc.scale_factor = params.scale_factor;
            out.scale_positions.push_back(out.layers.size());
            out.layers.push_back(std::move(sc));
        }
        s = layer_output_shape(l.desc, s);
    }
    return out;
}

}  // namespace detail

/// SimpleQuant: every weight, bias and input is multiplied by alpha and
/// rounded; no rescaling layers are inserted.
inline QuantizedModel simple_quant(const FloatModel& m, double alpha, const RnsBase& base) {
    require(alpha > 0, Errc::range_overflow, "alpha must be positive");
    QuantParams p;
    p.scheme = QuantScheme::simple;
    p.alpha = alpha;
    return detail::quantize_common(m, base, p, alpha, alpha, false);
}

/// ScaleQuant: weights and inputs scale by 2^ell, biases by 2^(2*ell); a
/// Scale(2^ell) layer follows every linear layer. Realized as one fused
/// gadget when 2^ell is a product of base moduli, otherwise as ell chained
/// divide-by-two steps (requires modulus 2 in the base).
inline QuantizedModel scale_quant(const FloatModel& m, uint32_t ell, const RnsBase& base) {
    require(ell >= 1 && ell < 63, Errc::unrealizable_scale, "bad exponent");
    uint64_t s = uint64_t(1) << ell;
    QuantParams p;
    p.scheme = QuantScheme::scale;
    p.ell = ell;
    p.scale_factor = s;
    bool fused_ok = true;
    try {
        scale_drop_positions(base, s);
    } catch (const Error&) {
        fused_ok = false;
    }
    if (fused_ok) {
        p.realization = ScaleMode::fused;
    } else {
        bool has_two = false;
        for (auto mod : base.moduli()) has_two |= (mod == 2);
        require(has_two, Errc::unrealizable_scale,
                "2^" + std::to_string(ell) + " not realizable in base");
        p.realization = ScaleMode::chained_pow2;
    }
    return detail::quantize_common(m, base, p, double(s), double(s) * double(s), true);
}

/// ScaleQuant+: like ScaleQuant but the factor may be any single modulus or
/// product of distinct base moduli; one fused Scale(s) layer per linear
/// layer, no chaining. Biases scale by s^2.
inline QuantizedModel scale_quant_plus(const FloatModel& m, uint64_t s, const RnsBase& base) {
    scale_drop_positions(base, s);  // throws InvalidScaleFactor when not a moduli product
    QuantParams p;
    p.scheme = QuantScheme::scale_plus;
    p.scale_factor = s;
    p.realization = ScaleMode::fused;
    return detail::quantize_common(m, base, p, double(s), double(s) * double(s), true);
}

inline std::vector<int64_t> quantize_inputs(const RnsBase& base, const QuantParams& params,
                                            std::span<const double> values) {
    std::vector<int64_t> out;
    out.reserve(values.size());
    for (double v : values)
        out.push_back(detail::quantize_checked(base, v, params.input_constant()));
    return out;
}

// ---------------------------------------------------------------------------
// Worst-case range analysis
// ---------------------------------------------------------------------------

struct RangeReport {
    struct Entry {
        size_t layer;
        LayerKind kind;
        u128 bound;  // worst-case |value| flowing out of (pre-scaling, for linear) the layer
        bool pass;
    };
    std::vector<Entry> layers;
    u128 limit = 0;
    bool pass = true;
};

/// Propagates a worst-case magnitude bound through the graph and compares
/// every linear layer's accumulator against the signed capacity of the ring.
inline RangeReport check_range(const QuantizedModel& m, uint64_t input_bound) {
    RangeReport rep;
    rep.limit = (m.base.product() - 1) / 2;
    u128 bound = input_bound;
    Shape s = m.input;
    for (size_t li = 0; li < m.layers.size(); ++li) {
        const QuantLayer& l = m.layers[li];
        RangeReport::Entry e{li, l.desc.kind, 0, true};
        switch (l.desc.kind) {
            case LayerKind::dense:
            case LayerKind::conv2d: {
                size_t rows = layer_bias_count(l.desc);
                size_t cols = l.weights.size() / std::max<size_t>(rows, 1);
                u128 worst = 0;
                for (size_t r = 0; r < rows; ++r) {
                    u128 acc = 0;
                    for (size_t c = 0; c < cols; ++c) {
                        int64_t w = l.weights[r * cols + c];
                        acc += u128(w < 0 ? uint64_t(-w) : uint64_t(w)) * bound;
                    }
                    int64_t b = l.bias[r];
                    acc += u128(b < 0 ? uint64_t(-b) : uint64_t(b));
                    worst = std::max(worst, acc);
                }
                e.bound = worst;
                e.pass = worst <= rep.limit;
                bound = worst;
                break;
            }
            case LayerKind::relu:
                e.bound = bound;
                break;
            case LayerKind::scale:
                bound = bound / l.desc.scale_factor + 1;
                e.bound = bound;
                break;
        }
        rep.pass = rep.pass && e.pass;
        rep.layers.push_back(e);
        s = layer_output_shape(l.desc, s);
    }
    return rep;
}

// Smallest candidate (by ring size) that quantizes cleanly and passes range
// analysis. Base selection stays manual; this is advisory only.
inline std::optional<RnsBase> advise_base(const FloatModel& m, QuantScheme scheme, double alpha,
                                          uint32_t ell, uint64_t s,
                                          const std::vector<std::vector<residue_t>>& candidates,
                                          uint64_t input_bound) {
    std::optional<RnsBase> best;
    for (const auto& moduli : candidates) {
        try {
            RnsBase base = make_base(moduli);
            QuantizedModel qm = scheme == QuantScheme::simple ? simple_quant(m, alpha, base)
                                : scheme == QuantScheme::scale ? scale_quant(m, ell, base)
                                                               : scale_quant_plus(m, s, base);
            if (!check_range(qm, input_bound).pass) continue;
            if (!best || base.product() < best->product()) best = base;
        } catch (const Error&) {
            continue;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Quantized model container (binary, little-endian)
// ---------------------------------------------------------------------------

inline constexpr uint32_t kQuantMagic = 0x51434741;  // "AGCQ"
inline constexpr uint16_t kQuantVersion = 1;

inline Bytes serialize_quantized(const QuantizedModel& m) {
    ByteWriter w;
    w.u32(kQuantMagic);
    w.u16(kQuantVersion);
    w.str(m.name);
    w.u32(uint32_t(m.input.h));
    w.u32(uint32_t(m.input.w));
    w.u32(uint32_t(m.input.c));
    w.u16(uint16_t(m.base.size()));
    for (auto p : m.base.moduli()) w.u32(p);
    w.u8(uint8_t(m.params.scheme));
    w.f64(m.params.alpha);
    w.u32(m.params.ell);
    w.u64(m.params.scale_factor);
    w.u8(m.params.realization == ScaleMode::fused ? 0 : 1);
    w.u32(uint32_t(m.layers.size()));
    for (const auto& l : m.layers) {
        w.u8(uint8_t(l.desc.kind));
        w.u64(l.desc.outputs);
        w.u64(l.desc.in_ch);
        w.u64(l.desc.out_ch);
        w.u64(l.desc.filter);
        w.u64(l.desc.stride);
        w.u64(l.desc.scale_factor);
        w.u32(uint32_t(l.weights.size()));
        for (int64_t v : l.weights) w.i64(v);
        w.u32(uint32_t(l.bias.size()));
        for (int64_t v : l.bias) w.i64(v);
    }
    w.u32(uint32_t(m.scale_positions.size()));
    for (size_t p : m.scale_positions) w.u64(p);
    return w.take();
}

inline QuantizedModel deserialize_quantized(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    require(r.u32() == kQuantMagic, Errc::malformed_frame, "not a quantized model file");
    require(r.u16() == kQuantVersion, Errc::version_mismatch, "quantized model version");
    QuantizedModel m;
    m.name = r.str();
    m.input.h = r.u32();
    m.input.w = r.u32();
    m.input.c = r.u32();
    size_t k = r.u16();
    std::vector<residue_t> moduli(k);
    for (auto& p : moduli) p = r.u32();
    m.base = make_base(std::move(moduli));
    m.params.scheme = QuantScheme(r.u8());
    m.params.alpha = r.f64();
    m.params.ell = r.u32();
    m.params.scale_factor = r.u64();
    m.params.realization = r.u8() == 0 ? ScaleMode::fused : ScaleMode::chained_pow2;
    size_t nl = r.u32();
    for (size_t i = 0; i < nl; ++i) {
        QuantLayer l;
        l.desc.kind = LayerKind(r.u8());
        l.desc.outputs = r.u64();
        l.desc.in_ch = r.u64();
        l.desc.out_ch = r.u64();
        l.desc.filter = r.u64();
        l.desc.stride = r.u64();
        l.desc.scale_factor = r.u64();
        l.weights.resize(r.u32());
        for (auto& v : l.weights) v = r.i64();
        l.bias.resize(r.u32());
        for (auto& v : l.bias) v = r.i64();
        m.layers.push_back(std::move(l));
    }
    size_t ns = r.u32();
    for (size_t i = 0; i < ns; ++i) m.scale_positions.push_back(r.u64());
    require(r.done(), Errc::malformed_frame, "trailing bytes in quantized model");
    return m;
}

}  // namespace agc
