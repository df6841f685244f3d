#pragma once

#include <cstdint>
#include <vector>

#include "agc/quantize.hpp"
#include "agc/rns.hpp"

namespace agc {

// Canonical Z_P vectors. All plaintext inference runs in the ring so it is
// bit-identical to what the garbled circuit computes, wraps included.
using RingVec = std::vector<uint64_t>;

namespace ring {

inline uint64_t reduce_signed(int64_t v, uint64_t p) {
    int64_t r = v % int64_t(p);
    if (r < 0) r += int64_t(p);
    return uint64_t(r);
}

// out[col*m + r] = sum_k A[r*kk + k] * B[col*kk + k] + bias[r]  (mod p)
inline RingVec matmul(const RingVec& a, size_t m, size_t kk, const RingVec& b, size_t cols,
                      const RingVec& bias, uint64_t p) {
    RingVec out(cols * m);
    for (size_t col = 0; col < cols; ++col) {
        const uint64_t* bcol = b.data() + col * kk;
        for (size_t r = 0; r < m; ++r) {
            const uint64_t* arow = a.data() + r * kk;
            u128 acc = bias.empty() ? 0 : bias[r];
            for (size_t k = 0; k < kk; ++k) acc = (acc + u128(arow[k]) * bcol[k]) % p;
            out[col * m + r] = uint64_t(acc);
        }
    }
    return out;
}

inline RingVec gather(const RingVec& src, const std::vector<size_t>& idx) {
    RingVec out(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) out[i] = src[idx[i]];
    return out;
}

}  // namespace ring

// Weight matrix reduced into the ring, row-major (rows x cols).
inline RingVec ring_weights(const std::vector<int64_t>& w, uint64_t p) {
    RingVec out(w.size());
    for (size_t i = 0; i < w.size(); ++i) out[i] = ring::reduce_signed(w[i], p);
    return out;
}

/// Direct nested-loop convolution over the ring; the independent second route
/// the im2col/matmul path is checked against.
inline RingVec conv2d_direct(const ConvGeom& g, const RingVec& weights, const RingVec& bias,
                             const RingVec& input, uint64_t p) {
    RingVec out(g.pixels() * g.out_ch);
    for (size_t oy = 0; oy < g.out_h; ++oy)
        for (size_t ox = 0; ox < g.out_w; ++ox)
            for (size_t oc = 0; oc < g.out_ch; ++oc) {
                u128 acc = bias.empty() ? 0 : bias[oc];
                for (size_t fy = 0; fy < g.filter; ++fy)
                    for (size_t fx = 0; fx < g.filter; ++fx)
                        for (size_t ch = 0; ch < g.in_ch; ++ch) {
                            size_t y = oy * g.stride + fy;
                            size_t x = ox * g.stride + fx;
                            uint64_t wv =
                                weights[((oc * g.filter + fy) * g.filter + fx) * g.in_ch + ch];
                            uint64_t xv = input[(y * g.in_w + x) * g.in_ch + ch];
                            acc = (acc + u128(wv) * xv) % p;
                        }
                out[(oy * g.out_w + ox) * g.out_ch + oc] = uint64_t(acc);
            }
    return out;
}

inline RingVec conv2d_matmul(const ConvGeom& g, const RingVec& weights, const RingVec& bias,
                             const RingVec& input, uint64_t p) {
    RingVec cols = ring::gather(input, g.im2col_indices());
    return ring::matmul(weights, g.out_ch, g.patch(), cols, g.pixels(), bias, p);
}

/// Exact integer inference in Z_P. Scale layers apply the gadget pipeline
/// semantics (shift up, per-residue divide, base extend, shift down).
inline RingVec plaintext_infer_ring(const QuantizedModel& m, RingVec x) {
    uint64_t p = m.base.product_u64();
    require(x.size() == m.input.count(), Errc::shape_mismatch, "input size mismatch");
    for (uint64_t v : x) require(v < p, Errc::out_of_range, "input not reduced");
    uint64_t positive_bound = uint64_t(m.base.positive_bound());

    Shape s = m.input;
    for (const QuantLayer& l : m.layers) {
        switch (l.desc.kind) {
            case LayerKind::dense: {
                RingVec w = ring_weights(l.weights, p);
                RingVec b = ring_weights(l.bias, p);
                x = ring::matmul(w, l.desc.outputs, s.count(), x, 1, b, p);
                break;
            }
            case LayerKind::conv2d: {
                ConvGeom g(s, l.desc);
                RingVec w = ring_weights(l.weights, p);
                RingVec b = ring_weights(l.bias, p);
                x = conv2d_matmul(g, w, b, x, p);
                break;
            }
            case LayerKind::relu:
                for (auto& v : x) v = v < positive_bound ? v : 0;
                break;
            case LayerKind::scale:
                for (auto& v : x)
                    v = scale_canonical(m.base, v, l.desc.scale_factor, m.params.realization);
                break;
        }
        s = layer_output_shape(l.desc, s);
    }
    return x;
}

inline std::vector<int64_t> plaintext_infer(const QuantizedModel& m,
                                            std::span<const int64_t> input) {
    RingVec x(input.size());
    for (size_t i = 0; i < input.size(); ++i) x[i] = m.base.encode_signed(input[i]);
    RingVec y = plaintext_infer_ring(m, std::move(x));
    std::vector<int64_t> out(y.size());
    for (size_t i = 0; i < y.size(); ++i) out[i] = m.base.decode_signed(y[i]);
    return out;
}

}  // namespace agc
