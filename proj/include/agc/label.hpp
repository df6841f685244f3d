#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "agc/bytes.hpp"
#include "agc/errors.hpp"
#include "agc/parallel.hpp"
#include "agc/rns.hpp"

namespace agc {

// Smallest n with p^n >= 2^lambda; label components live in Z_p, so n of
// them give lambda bits of key material.
inline uint32_t num_components(uint32_t p, uint32_t lambda) {
    require(p >= 2, Errc::modulus_too_small, "modulus < 2");
    require(lambda >= 1 && lambda <= 128, Errc::out_of_range, "lambda outside 1..128");
    u128 acc = 1;
    uint32_t n = 0;
    for (;;) {
        u128 next = acc * p;
        bool overflow = next / p != acc;
        ++n;
        if (overflow) return n;  // next >= 2^128 >= 2^lambda
        acc = next;
        if (lambda < 128 && acc >= (u128(1) << lambda)) return n;
    }
}

// Canonical byte width of one component in the wire encoding.
inline uint32_t enc_width(uint32_t p) {
    if (p <= (1u << 8)) return 1;
    if (p <= (1u << 16)) return 2;
    return 4;
}

// One wire label: a component vector over Z_p. The first component doubles
// as the public color used for row indexing.
class Label {
  public:
    Label() = default;
    Label(uint32_t modulus, size_t n) : modulus_(modulus), comps_(n, 0) {}
    Label(uint32_t modulus, std::vector<uint32_t> comps)
        : modulus_(modulus), comps_(std::move(comps)) {}

    uint32_t modulus() const { return modulus_; }
    size_t size() const { return comps_.size(); }
    uint32_t operator[](size_t i) const { return comps_[i]; }
    uint32_t& operator[](size_t i) { return comps_[i]; }
    const std::vector<uint32_t>& components() const { return comps_; }

    uint32_t color() const { return comps_.empty() ? 0 : comps_[0]; }

    Label& operator+=(const Label& o) {
        check_same(o);
        for (size_t i = 0; i < comps_.size(); ++i)
            comps_[i] = uint32_t((uint64_t(comps_[i]) + o.comps_[i]) % modulus_);
        return *this;
    }

    Label& operator-=(const Label& o) {
        check_same(o);
        for (size_t i = 0; i < comps_.size(); ++i)
            comps_[i] = uint32_t((uint64_t(comps_[i]) + modulus_ - o.comps_[i]) % modulus_);
        return *this;
    }

    // scale by a public constant
    Label& operator*=(uint32_t c) {
        uint64_t cc = c % modulus_;
        for (auto& v : comps_) v = uint32_t(uint64_t(v) * cc % modulus_);
        return *this;
    }

    friend Label operator+(Label a, const Label& b) { return a += b; }
    friend Label operator-(Label a, const Label& b) { return a -= b; }
    friend Label operator*(Label a, uint32_t c) { return a *= c; }

    bool operator==(const Label&) const = default;

    // canonical little-endian fixed-width component array
    void encode_to(ByteWriter& w) const {
        uint32_t width = enc_width(modulus_);
        for (uint32_t v : comps_)
            for (uint32_t i = 0; i < width; ++i) w.u8(uint8_t(v >> (8 * i)));
    }

    Bytes canonical_bytes() const {
        ByteWriter w;
        encode_to(w);
        return w.take();
    }

    static size_t encoded_size(uint32_t modulus, size_t n) { return n * enc_width(modulus); }

    // strict parse: every component must already be reduced
    static Label decode(uint32_t modulus, size_t n, std::span<const uint8_t> bytes) {
        uint32_t width = enc_width(modulus);
        require(bytes.size() >= n * width, Errc::malformed_frame, "label bytes too short");
        Label l(modulus, n);
        for (size_t i = 0; i < n; ++i) {
            uint32_t v = 0;
            for (uint32_t b = 0; b < width; ++b) v |= uint32_t(bytes[i * width + b]) << (8 * b);
            require(v < modulus, Errc::auth_failure, "label component out of range");
            l.comps_[i] = v;
        }
        return l;
    }

  private:
    void check_same(const Label& o) const {
        require(modulus_ == o.modulus_ && comps_.size() == o.comps_.size(),
                Errc::modulus_mismatch, "label modulus/size mismatch");
    }

    uint32_t modulus_ = 0;
    std::vector<uint32_t> comps_;
};

// Batch of wire labels sharing one modulus, stored component-major so that
// per-component arithmetic (and the linear layers built on it) runs over
// contiguous memory: data[c * wires + w].
class LabelTensor {
  public:
    LabelTensor() = default;
    LabelTensor(uint32_t modulus, size_t wires, size_t comps)
        : modulus_(modulus), wires_(wires), comps_(comps), data_(wires * comps, 0) {}

    uint32_t modulus() const { return modulus_; }
    size_t wires() const { return wires_; }
    size_t comps() const { return comps_; }
    const std::vector<uint32_t>& data() const { return data_; }
    std::vector<uint32_t>& data() { return data_; }

    uint32_t* plane(size_t c) { return data_.data() + c * wires_; }
    const uint32_t* plane(size_t c) const { return data_.data() + c * wires_; }

    Label get(size_t wire) const {
        Label l(modulus_, comps_);
        for (size_t c = 0; c < comps_; ++c) l[c] = data_[c * wires_ + wire];
        return l;
    }

    void set(size_t wire, const Label& l) {
        require(l.modulus() == modulus_ && l.size() == comps_, Errc::modulus_mismatch,
                "label does not fit tensor");
        for (size_t c = 0; c < comps_; ++c) data_[c * wires_ + wire] = l[c];
    }

    // componentwise tensor addition (free garbled addition over many wires)
    LabelTensor& operator+=(const LabelTensor& o) {
        require(modulus_ == o.modulus_ && wires_ == o.wires_ && comps_ == o.comps_,
                Errc::modulus_mismatch, "tensor mismatch");
        for (size_t i = 0; i < data_.size(); ++i)
            data_[i] = uint32_t((uint64_t(data_[i]) + o.data_[i]) % modulus_);
        return *this;
    }

    LabelTensor& operator*=(uint32_t c) {
        uint64_t cc = c % modulus_;
        for (auto& v : data_) v = uint32_t(uint64_t(v) * cc % modulus_);
        return *this;
    }

    // new tensor with wires picked (with repetition) by idx
    LabelTensor gather(std::span<const size_t> idx) const {
        LabelTensor out(modulus_, idx.size(), comps_);
        for (size_t c = 0; c < comps_; ++c) {
            const uint32_t* src = plane(c);
            uint32_t* dst = out.plane(c);
            for (size_t i = 0; i < idx.size(); ++i) dst[i] = src[idx[i]];
        }
        return out;
    }

    /// out[col*m + r] = sum_k a[r*kk + k] * in[col*kk + k] per component plane.
    /// `a` is a public (m x kk) matrix already reduced mod p. Accumulates in
    /// 64 bits with a single reduction per dot product whenever
    /// kk * (p-1)^2 fits, otherwise reduces in blocks.
    static LabelTensor matmul(std::span<const uint32_t> a, size_t m, size_t kk,
                              const LabelTensor& in, size_t cols, unsigned threads = 1) {
        require(in.wires_ == cols * kk, Errc::shape_mismatch, "matmul input wires");
        uint64_t p = in.modulus_;
        uint64_t sq = (p - 1) * (p - 1);
        size_t block = sq ? size_t(std::min<uint64_t>(kk ? kk : 1, UINT64_MAX / sq)) : kk;
        if (block == 0) block = 1;

        LabelTensor out(in.modulus_, cols * m, in.comps_);
        parallel_for(in.comps_ * cols, threads, [&](size_t lo, size_t hi) {
            for (size_t job = lo; job < hi; ++job) {
                size_t c = job / cols;
                size_t col = job % cols;
                const uint32_t* bcol = in.plane(c) + col * kk;
                uint32_t* dst = out.plane(c) + col * m;
                for (size_t r = 0; r < m; ++r) {
                    const uint32_t* arow = a.data() + r * kk;
                    uint64_t acc = 0;
                    size_t k = 0;
                    while (k < kk) {
                        size_t end = std::min(kk, k + block);
                        for (; k < end; ++k) acc += uint64_t(arow[k]) * bcol[k];
                        acc %= p;
                    }
                    dst[r] = uint32_t(acc);
                }
            }
        });
        return out;
    }

    void serialize(ByteWriter& w) const {
        w.u32(modulus_);
        w.u32(uint32_t(wires_));
        w.u16(uint16_t(comps_));
        uint32_t width = enc_width(modulus_);
        for (uint32_t v : data_)
            for (uint32_t i = 0; i < width; ++i) w.u8(uint8_t(v >> (8 * i)));
    }

    static LabelTensor deserialize(ByteReader& r) {
        uint32_t modulus = r.u32();
        require(modulus >= 2, Errc::malformed_frame, "bad tensor modulus");
        size_t wires = r.u32();
        size_t comps = r.u16();
        LabelTensor t(modulus, wires, comps);
        uint32_t width = enc_width(modulus);
        Bytes raw = r.bytes(wires * comps * width);
        for (size_t i = 0; i < t.data_.size(); ++i) {
            uint32_t v = 0;
            for (uint32_t b = 0; b < width; ++b) v |= uint32_t(raw[i * width + b]) << (8 * b);
            require(v < modulus, Errc::malformed_frame, "tensor component out of range");
            t.data_[i] = v;
        }
        return t;
    }

    bool operator==(const LabelTensor&) const = default;

  private:
    uint32_t modulus_ = 0;
    size_t wires_ = 0, comps_ = 0;
    std::vector<uint32_t> data_;
};

}  // namespace agc
