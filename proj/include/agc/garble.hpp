#pragma once

#include <cstdint>
#include <map>
#include <numeric>
#include <utility>
#include <variant>
#include <vector>

#include "agc/hash.hpp"
#include "agc/label.hpp"
#include "agc/rns.hpp"

namespace agc {

inline constexpr uint32_t kMinLambda = 16;
inline constexpr uint32_t kMaxLambda = 128;
inline constexpr size_t kRowTagLen = 8;  // zero bytes appended before encryption

struct GarblingParams {
    uint32_t lambda = 128;
    bool row_reduction = true;
    uint8_t hash_alg = kHashSha256;
};

// Garbler-side root of all randomness. Offsets R are derived per modulus
// straight from the seed (so they do not depend on gate order); fresh base
// labels and gate ids are sequenced, which keeps garbling single-writer and
// bit-reproducible for a fixed seed.
class GarblingContext {
  public:
    GarblingContext(std::span<const uint8_t> seed, RnsBase base, GarblingParams params = {})
        : base_(std::move(base)), params_(params), seed_(seed.begin(), seed.end()),
          rng_(make_rng(seed_, "labels")) {
        require(!seed.empty(), Errc::out_of_range, "empty seed");
        require(params_.lambda >= kMinLambda && params_.lambda <= kMaxLambda, Errc::out_of_range,
                "lambda outside supported range");
        require(params_.hash_alg == kHashSha256, Errc::version_mismatch,
                "unknown hash algorithm id");
    }

    GarblingContext(const std::string& seed, RnsBase base, GarblingParams params = {})
        : GarblingContext(std::span<const uint8_t>(
                              reinterpret_cast<const uint8_t*>(seed.data()), seed.size()),
                          std::move(base), params) {}

    const RnsBase& base() const { return base_; }
    const GarblingParams& params() const { return params_; }
    uint32_t lambda() const { return params_.lambda; }
    bool row_reduction() const { return params_.row_reduction; }

    uint32_t components(uint32_t modulus) const { return num_components(modulus, params_.lambda); }

    // Global offset label R for a modulus; the first component is a unit so
    // colors permute and distinct values get distinct labels.
    const Label& offset(uint32_t modulus) {
        auto it = offsets_.find(modulus);
        if (it != offsets_.end()) return it->second;
        ByteWriter w;
        w.bytes(seed_);
        w.str("offset");
        w.u32(modulus);
        DetRng rng(w.data());
        Label r(modulus, components(modulus));
        for (size_t i = 0; i < r.size(); ++i) r[i] = rng.uniform(modulus);
        while (std::gcd(r[0], modulus) != 1) r[0] = rng.uniform(modulus);
        return offsets_.emplace(modulus, std::move(r)).first->second;
    }

    Label fresh_label(uint32_t modulus) {
        Label l(modulus, components(modulus));
        for (size_t i = 0; i < l.size(); ++i) l[i] = rng_.uniform(modulus);
        return l;
    }

    uint32_t next_gate_id() { return gate_counter_++; }

  private:
    static DetRng make_rng(const Bytes& seed, const char* domain) {
        ByteWriter w;
        w.bytes(seed);
        w.str(domain);
        return DetRng(w.data());
    }

    RnsBase base_;
    GarblingParams params_;
    Bytes seed_;
    DetRng rng_;
    std::map<uint32_t, Label> offsets_;
    uint32_t gate_counter_ = 0;
};

// ---------------------------------------------------------------------------
// Wires
// ---------------------------------------------------------------------------

// What the garbler keeps per wire: the label of value 0. The label of value
// a is base + a*R with R the context offset for the wire's modulus.
struct WireSecrets {
    uint32_t modulus = 0;
    Label base;
};

inline WireSecrets fresh_wire(GarblingContext& ctx, uint32_t modulus) {
    return WireSecrets{modulus, ctx.fresh_label(modulus)};
}

// Constant-zero wire: label known to both parties by convention.
inline WireSecrets const_zero_wire(GarblingContext& ctx, uint32_t modulus) {
    return WireSecrets{modulus, Label(modulus, ctx.components(modulus))};
}

inline Label const_zero_label(uint32_t modulus, uint32_t lambda) {
    return Label(modulus, num_components(modulus, lambda));
}

inline Label encode_value(GarblingContext& ctx, const WireSecrets& w, uint32_t value) {
    require(value < w.modulus, Errc::out_of_range, "value not reduced");
    return w.base + ctx.offset(w.modulus) * value;
}

// Recovers the value from a label via the color component, then verifies the
// whole label. A mismatch means a corrupted table or a wrong-wire label.
inline uint32_t decode_label(GarblingContext& ctx, const WireSecrets& w, const Label& l) {
    const Label& r = ctx.offset(w.modulus);
    uint64_t p = w.modulus;
    uint64_t diff = (l.color() + p - w.base.color()) % p;
    uint32_t value = uint32_t(diff * detail::inv_mod(r.color(), w.modulus) % p);
    require(w.base + r * value == l, Errc::auth_failure, "label fails decode check");
    return value;
}

// Free ops. Garble-time constant addition re-bases the wire: the physical
// labels are untouched and the evaluator does no work, only the garbler's
// view of which value a label encodes shifts by +c.
inline WireSecrets cadd_wire(GarblingContext& ctx, const WireSecrets& w, uint32_t c) {
    return WireSecrets{w.modulus, w.base - ctx.offset(w.modulus) * (c % w.modulus)};
}

inline WireSecrets add_wires(const WireSecrets& a, const WireSecrets& b) {
    require(a.modulus == b.modulus, Errc::modulus_mismatch, "wire modulus mismatch");
    return WireSecrets{a.modulus, a.base + b.base};
}

inline WireSecrets sub_wires(const WireSecrets& a, const WireSecrets& b) {
    require(a.modulus == b.modulus, Errc::modulus_mismatch, "wire modulus mismatch");
    return WireSecrets{a.modulus, a.base - b.base};
}

inline WireSecrets cmul_wire(const WireSecrets& a, uint32_t c) {
    return WireSecrets{a.modulus, a.base * c};
}

// ---------------------------------------------------------------------------
// Garbled tables
// ---------------------------------------------------------------------------

struct ProjectionTable {
    uint32_t gate_id = 0;
    uint32_t in_mod = 0, out_mod = 0;
    uint16_t out_comps = 0;
    bool row_reduced = false;
    uint32_t row_bytes = 0;
    Bytes rows;  // indexed by input color (minus one when reduced)

    size_t n_rows() const { return row_bytes ? rows.size() / row_bytes : 0; }
};

struct LookupTable2 {
    uint32_t gate_id = 0;
    uint32_t in_mod_a = 0, in_mod_b = 0, out_mod = 0;
    uint16_t out_comps = 0;
    uint32_t row_bytes = 0;
    Bytes rows;  // indexed by color_a * in_mod_b + color_b

    size_t n_rows() const { return row_bytes ? rows.size() / row_bytes : 0; }
};

namespace detail {

inline Bytes row_material(char kind, uint32_t gate_id, const Label& a, const Label* b = nullptr) {
    ByteWriter w;
    w.u8(uint8_t(kind));
    w.u32(gate_id);
    w.u32(a.color());
    if (b) w.u32(b->color());
    a.encode_to(w);
    if (b) b->encode_to(w);
    return w.take();
}

inline Bytes row_pad(const Bytes& material, size_t len) {
    Bytes pad(len);
    prf_stream(material, pad);
    return pad;
}

// Row-reduction output label: read straight out of the hash stream.
inline Label derive_label(const Bytes& material, uint32_t out_mod, uint32_t n_comps) {
    Bytes raw(size_t(n_comps) * 4);
    prf_stream(material, raw);
    Label l(out_mod, n_comps);
    for (uint32_t i = 0; i < n_comps; ++i) {
        uint32_t v = 0;
        for (int b = 0; b < 4; ++b) v |= uint32_t(raw[i * 4 + b]) << (8 * b);
        l[i] = v % out_mod;
    }
    return l;
}

inline void write_row(Bytes& rows, size_t index, size_t row_bytes, const Label& out_label,
                      const Bytes& material) {
    ByteWriter plain;
    out_label.encode_to(plain);
    Bytes row = plain.take();
    row.resize(row_bytes, 0);  // zero tag
    Bytes pad = row_pad(material, row_bytes);
    for (size_t i = 0; i < row_bytes; ++i) row[i] ^= pad[i];
    std::copy(row.begin(), row.end(), rows.begin() + index * row_bytes);
}

inline Label read_row(const Bytes& rows, size_t index, size_t row_bytes, uint32_t out_mod,
                      uint32_t n_comps, const Bytes& material) {
    require((index + 1) * row_bytes <= rows.size(), Errc::auth_failure, "row index out of table");
    Bytes row(rows.begin() + index * row_bytes, rows.begin() + (index + 1) * row_bytes);
    Bytes pad = row_pad(material, row_bytes);
    for (size_t i = 0; i < row_bytes; ++i) row[i] ^= pad[i];
    size_t enc_len = Label::encoded_size(out_mod, n_comps);
    for (size_t i = enc_len; i < row_bytes; ++i)
        require(row[i] == 0, Errc::auth_failure, "row integrity tag mismatch");
    return Label::decode(out_mod, n_comps, row);
}

}  // namespace detail

/// Garbles a unary projection phi: Z_p -> Z_q. Costs p ciphertexts, or p-1
/// with row reduction where the color-zero row's output label is the hash
/// image itself and the output wire is re-based around it.
template <typename Phi>
inline std::pair<ProjectionTable, WireSecrets> garble_projection(GarblingContext& ctx,
                                                                 const WireSecrets& in,
                                                                 uint32_t out_mod, Phi&& phi) {
    uint32_t p = in.modulus;
    uint32_t q = out_mod;
    const Label& r_in = ctx.offset(p);
    const Label& r_out = ctx.offset(q);
    uint32_t n_out = ctx.components(q);

    ProjectionTable t;
    t.gate_id = ctx.next_gate_id();
    t.in_mod = p;
    t.out_mod = q;
    t.out_comps = uint16_t(n_out);
    t.row_reduced = ctx.row_reduction();
    t.row_bytes = uint32_t(Label::encoded_size(q, n_out) + kRowTagLen);

    WireSecrets out;
    out.modulus = q;
    uint32_t a0 = 0;
    if (t.row_reduced) {
        // input value whose label carries color 0
        uint64_t inv0 = detail::inv_mod(r_in.color(), p);
        a0 = uint32_t((uint64_t(p) - in.base.color()) % p * inv0 % p);
        Label la0 = in.base + r_in * a0;
        Label derived = detail::derive_label(detail::row_material('p', t.gate_id, la0), q, n_out);
        uint32_t va0 = phi(a0) % q;
        out.base = derived - r_out * va0;
    } else {
        out.base = ctx.fresh_label(q);
    }

    size_t rows = t.row_reduced ? p - 1 : p;
    t.rows.assign(rows * t.row_bytes, 0);
    for (uint32_t a = 0; a < p; ++a) {
        Label la = in.base + r_in * a;
        uint32_t color = la.color();
        if (t.row_reduced && color == 0) continue;
        size_t index = t.row_reduced ? color - 1 : color;
        Label lout = out.base + r_out * (phi(a) % q);
        detail::write_row(t.rows, index, t.row_bytes,
                          lout, detail::row_material('p', t.gate_id, la));
    }
    return {std::move(t), std::move(out)};
}

inline Label eval_projection(const ProjectionTable& t, const Label& x) {
    require(x.modulus() == t.in_mod, Errc::modulus_mismatch, "projection input modulus");
    Bytes material = detail::row_material('p', t.gate_id, x);
    uint32_t color = x.color();
    if (t.row_reduced && color == 0)
        return detail::derive_label(material, t.out_mod, t.out_comps);
    size_t index = t.row_reduced ? color - 1 : color;
    return detail::read_row(t.rows, index, t.row_bytes, t.out_mod, t.out_comps, material);
}

/// Garbles a general two-input gate psi: Z_p x Z_q -> Z_m as a p*q row table
/// keyed by both labels. This is the stand-in for mixed-modulus multiplication
/// gates: more ciphertexts, but total and exact.
template <typename Psi>
inline std::pair<LookupTable2, WireSecrets> garble_lookup2(GarblingContext& ctx,
                                                           const WireSecrets& a,
                                                           const WireSecrets& b, uint32_t out_mod,
                                                           Psi&& psi) {
    uint32_t p = a.modulus, q = b.modulus, m = out_mod;
    const Label& ra = ctx.offset(p);
    const Label& rb = ctx.offset(q);
    const Label& rm = ctx.offset(m);
    uint32_t n_out = ctx.components(m);

    LookupTable2 t;
    t.gate_id = ctx.next_gate_id();
    t.in_mod_a = p;
    t.in_mod_b = q;
    t.out_mod = m;
    t.out_comps = uint16_t(n_out);
    t.row_bytes = uint32_t(Label::encoded_size(m, n_out) + kRowTagLen);
    t.rows.assign(size_t(p) * q * t.row_bytes, 0);

    WireSecrets out{m, ctx.fresh_label(m)};
    for (uint32_t va = 0; va < p; ++va) {
        Label la = a.base + ra * va;
        for (uint32_t vb = 0; vb < q; ++vb) {
            Label lb = b.base + rb * vb;
            size_t index = size_t(la.color()) * q + lb.color();
            Label lout = out.base + rm * (psi(va, vb) % m);
            detail::write_row(t.rows, index, t.row_bytes, lout,
                              detail::row_material('l', t.gate_id, la, &lb));
        }
    }
    return {std::move(t), std::move(out)};
}

inline Label eval_lookup2(const LookupTable2& t, const Label& x, const Label& y) {
    require(x.modulus() == t.in_mod_a && y.modulus() == t.in_mod_b, Errc::modulus_mismatch,
            "lookup input modulus");
    size_t index = size_t(x.color()) * t.in_mod_b + y.color();
    return detail::read_row(t.rows, index, t.row_bytes, t.out_mod, t.out_comps,
                            detail::row_material('l', t.gate_id, x, &y));
}

// ---------------------------------------------------------------------------
// Ordered table stream
// ---------------------------------------------------------------------------

using TableEntry = std::variant<ProjectionTable, LookupTable2>;

inline size_t entry_rows(const TableEntry& e) {
    return std::visit([](const auto& t) { return t.n_rows(); }, e);
}

// Tables in garbling order; evaluation consumes them through a cursor so the
// same driver code runs on both sides.
class TableStream {
  public:
    void append(ProjectionTable t) { entries_.push_back(std::move(t)); }
    void append(LookupTable2 t) { entries_.push_back(std::move(t)); }

    size_t size() const { return entries_.size(); }
    const TableEntry& at(size_t i) const { return entries_[i]; }

    const ProjectionTable& projection_at(size_t i) const {
        require(i < entries_.size(), Errc::malformed_frame, "table stream exhausted");
        const auto* t = std::get_if<ProjectionTable>(&entries_[i]);
        require(t != nullptr, Errc::malformed_frame, "expected projection table");
        return *t;
    }

    const LookupTable2& lookup_at(size_t i) const {
        require(i < entries_.size(), Errc::malformed_frame, "table stream exhausted");
        const auto* t = std::get_if<LookupTable2>(&entries_[i]);
        require(t != nullptr, Errc::malformed_frame, "expected lookup table");
        return *t;
    }

    size_t total_rows() const {
        size_t n = 0;
        for (const auto& e : entries_) n += entry_rows(e);
        return n;
    }

    void serialize(ByteWriter& w) const {
        w.u32(uint32_t(entries_.size()));
        for (const auto& e : entries_) {
            if (const auto* p = std::get_if<ProjectionTable>(&e)) {
                w.u8('P');
                w.u32(p->gate_id);
                w.u32(p->in_mod);
                w.u32(p->out_mod);
                w.u16(p->out_comps);
                w.u8(p->row_reduced ? 1 : 0);
                w.u32(p->row_bytes);
                w.blob(p->rows);
            } else {
                const auto& l = std::get<LookupTable2>(e);
                w.u8('L');
                w.u32(l.gate_id);
                w.u32(l.in_mod_a);
                w.u32(l.in_mod_b);
                w.u32(l.out_mod);
                w.u16(l.out_comps);
                w.u32(l.row_bytes);
                w.blob(l.rows);
            }
        }
    }

    static TableStream deserialize(ByteReader& r) {
        TableStream s;
        size_t n = r.u32();
        for (size_t i = 0; i < n; ++i) {
            uint8_t kind = r.u8();
            if (kind == 'P') {
                ProjectionTable t;
                t.gate_id = r.u32();
                t.in_mod = r.u32();
                t.out_mod = r.u32();
                t.out_comps = r.u16();
                t.row_reduced = r.u8() != 0;
                t.row_bytes = r.u32();
                t.rows = r.blob();
                require(t.row_bytes > 0 && t.rows.size() % t.row_bytes == 0,
                        Errc::malformed_frame, "bad projection table");
                s.append(std::move(t));
            } else if (kind == 'L') {
                LookupTable2 t;
                t.gate_id = r.u32();
                t.in_mod_a = r.u32();
                t.in_mod_b = r.u32();
                t.out_mod = r.u32();
                t.out_comps = r.u16();
                t.row_bytes = r.u32();
                t.rows = r.blob();
                require(t.row_bytes > 0 && t.rows.size() % t.row_bytes == 0,
                        Errc::malformed_frame, "bad lookup table");
                s.append(std::move(t));
            } else {
                fail(Errc::malformed_frame, "unknown table kind");
            }
        }
        return s;
    }

    bool operator==(const TableStream& o) const {
        if (entries_.size() != o.entries_.size()) return false;
        ByteWriter a, b;
        serialize(a);
        o.serialize(b);
        return a.data() == b.data();
    }

  private:
    std::vector<TableEntry> entries_;
};

}  // namespace agc
