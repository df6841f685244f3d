#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "agc/garble.hpp"
#include "agc/rns.hpp"

namespace agc {

// The gadget circuits below are written once as drivers over a "side" policy:
// the garbler side materializes tables and tracks base labels, the evaluator
// side consumes tables in the same order. Free operations (label addition,
// constant multiplication, garble-time constant addition) cost nothing on
// either side.

struct GarbleSide {
    using Wire = WireSecrets;
    static constexpr bool garbling = true;

    GarblingContext& ctx;
    TableStream& tables;

    template <typename Phi>
    Wire projection(const Wire& in, uint32_t out_mod, Phi&& phi) {
        auto [t, out] = garble_projection(ctx, in, out_mod, std::forward<Phi>(phi));
        tables.append(std::move(t));
        return out;
    }

    template <typename Psi>
    Wire lookup2(const Wire& a, const Wire& b, uint32_t out_mod, Psi&& psi) {
        auto [t, out] = garble_lookup2(ctx, a, b, out_mod, std::forward<Psi>(psi));
        tables.append(std::move(t));
        return out;
    }

    Wire add(const Wire& a, const Wire& b) { return add_wires(a, b); }
    Wire cmul(const Wire& a, uint32_t c) { return cmul_wire(a, c); }
    Wire cadd(const Wire& a, uint32_t c) { return cadd_wire(ctx, a, c); }
    Wire zero(uint32_t modulus) { return const_zero_wire(ctx, modulus); }
};

struct EvalSide {
    using Wire = Label;
    static constexpr bool garbling = false;

    const TableStream& tables;
    uint32_t lambda;
    size_t cursor = 0;

    template <typename Phi>
    Wire projection(const Wire& in, uint32_t, Phi&&) {
        return eval_projection(tables.projection_at(cursor++), in);
    }

    template <typename Psi>
    Wire lookup2(const Wire& a, const Wire& b, uint32_t, Psi&&) {
        return eval_lookup2(tables.lookup_at(cursor++), a, b);
    }

    Wire add(const Wire& a, const Wire& b) { return a + b; }
    Wire cmul(const Wire& a, uint32_t c) { return a * c; }
    Wire cadd(const Wire& a, uint32_t) { return a; }  // evaluator does no work
    Wire zero(uint32_t modulus) { return const_zero_label(modulus, lambda); }
};

namespace gadget {

// Subtract wire `d` (mod p_i) from `acc` (mod p_j) and divide by p_i: one
// projection of the digit into the target modulus plus free ops.
template <class S>
typename S::Wire fold_digit(S& side, const typename S::Wire& acc, const typename S::Wire& d,
                            const RnsBase& base, size_t i, size_t j) {
    uint32_t pj = base.modulus(j);
    auto neg = side.projection(d, pj, [pj](uint32_t v) { return (pj - v % pj) % pj; });
    return side.cmul(side.add(acc, neg), base.inv(i, j));
}

/// Generalized base extension. `survivors` carry the residues of y at the
/// `alive` positions (y < prod of alive moduli); returns one wire per target
/// position holding [y]_target. Digit extraction across the survivors is
/// shared by all targets; the first recursion level is the identity and costs
/// nothing.
template <class S>
std::vector<typename S::Wire> base_extension(S& side, const RnsBase& base,
                                             std::span<const typename S::Wire> survivors,
                                             std::span<const size_t> alive,
                                             std::span<const size_t> targets) {
    using Wire = typename S::Wire;
    size_t m = alive.size();
    require(survivors.size() == m && m >= 1, Errc::shape_mismatch, "base extension wiring");

    std::vector<Wire> track(survivors.begin(), survivors.end());
    std::vector<Wire> tgt;
    std::vector<uint64_t> prod_mod(targets.size(), 1);
    for (size_t t : targets) tgt.push_back(side.zero(base.modulus(t)));

    for (size_t n = 0; n < m; ++n) {
        size_t i = alive[n];
        const Wire digit = track[n];
        for (size_t jn = n + 1; jn < m; ++jn)
            track[jn] = fold_digit(side, track[jn], digit, base, i, alive[jn]);
        for (size_t ti = 0; ti < targets.size(); ++ti) {
            size_t t = targets[ti];
            tgt[ti] = fold_digit(side, tgt[ti], digit, base, i, t);
            prod_mod[ti] = prod_mod[ti] * (base.modulus(i) % base.modulus(t)) % base.modulus(t);
        }
    }
    // target track now holds the zero-filled value's top MRS digit;
    // [y]_t = -prod(alive moduli) * digit mod p_t
    for (size_t ti = 0; ti < targets.size(); ++ti) {
        uint32_t pt = base.modulus(targets[ti]);
        tgt[ti] = side.cmul(tgt[ti], uint32_t((pt - prod_mod[ti]) % pt));
    }
    return tgt;
}

template <class W>
struct ScaleStagesT {
    std::vector<W> after_shift_up;  // all k wires
    std::vector<W> survivors;       // wires still live after the divide steps
    std::vector<size_t> alive;      // their positions
    std::vector<W> after_extend;    // all k wires again
};

/// The four-step scaling gadget: garble-time shift up by floor(P/2), one
/// per-residue divide step per dropped modulus, base extension of every
/// dropped position, shift down by floor(P/(2s)). Input and output are full
/// residue-vector wire sets over the base.
template <class S>
std::vector<typename S::Wire> scaling(S& side, const RnsBase& base, std::span<const size_t> drop,
                                      std::span<const typename S::Wire> in,
                                      ScaleStagesT<typename S::Wire>* stages = nullptr) {
    using Wire = typename S::Wire;
    size_t k = base.size();
    require(in.size() == k, Errc::shape_mismatch, "scaling input wiring");
    require(!drop.empty() && drop.size() < k, Errc::invalid_scale_factor, "bad drop set");

    uint64_t p_all = base.product_u64();
    uint64_t s = 1;
    for (size_t t : drop) s *= base.modulus(t);
    uint64_t up = p_all / 2;
    uint64_t down = p_all / (2 * s);

    std::vector<Wire> wires(in.begin(), in.end());
    for (size_t i = 0; i < k; ++i)
        wires[i] = side.cadd(wires[i], uint32_t(up % base.modulus(i)));
    if (stages) stages->after_shift_up = wires;

    std::vector<size_t> alive(k);
    std::iota(alive.begin(), alive.end(), size_t(0));
    for (size_t t : drop) {
        alive.erase(std::find(alive.begin(), alive.end(), t));
        const Wire digit = wires[t];
        for (size_t j : alive) wires[j] = fold_digit(side, wires[j], digit, base, t, j);
    }

    std::vector<Wire> survivors;
    for (size_t j : alive) survivors.push_back(wires[j]);
    if (stages) {
        stages->survivors = survivors;
        stages->alive = alive;
    }

    std::vector<Wire> extended = base_extension(side, base, std::span<const Wire>(survivors),
                                                std::span<const size_t>(alive), drop);
    for (size_t ti = 0; ti < drop.size(); ++ti) wires[drop[ti]] = extended[ti];
    if (stages) stages->after_extend = wires;

    for (size_t i = 0; i < k; ++i) {
        uint32_t pi = base.modulus(i);
        wires[i] = side.cadd(wires[i], uint32_t((pi - down % pi) % pi));
    }
    return wires;
}

/// Exact sign via garbled RNS->MRS conversion: extract all mixed-radix
/// digits, three-way-compare each against the constant digits of the
/// threshold ceil(P/2), fold most-significant-first through Z_3 lookup
/// combiners, and project the verdict to one bit (1 = non-negative).
template <class S>
typename S::Wire sign(S& side, const RnsBase& base, std::span<const typename S::Wire> in) {
    using Wire = typename S::Wire;
    size_t k = base.size();
    require(in.size() == k, Errc::shape_mismatch, "sign input wiring");

    MrsDigits thr = to_mrs(base, to_residues(base, base.positive_bound()));

    std::vector<Wire> track(in.begin(), in.end());
    std::vector<Wire> digits(k, side.zero(2));
    for (size_t i = 0; i < k; ++i) {
        digits[i] = track[i];
        for (size_t j = i + 1; j < k; ++j)
            track[j] = fold_digit(side, track[j], digits[i], base, i, j);
    }

    // 0 = below threshold digit, 1 = equal, 2 = above
    std::vector<Wire> cmp;
    for (size_t i = 0; i < k; ++i) {
        uint32_t t = thr[i];
        cmp.push_back(side.projection(digits[i], 3, [t](uint32_t v) {
            return v < t ? 0u : v == t ? 1u : 2u;
        }));
    }

    Wire state = cmp[k - 1];
    for (size_t i = k - 1; i-- > 0;)
        state = side.lookup2(state, cmp[i], 3,
                             [](uint32_t hi, uint32_t lo) { return hi == 1 ? lo : hi; });

    return side.projection(state, 2, [](uint32_t v) { return v == 0 ? 1u : 0u; });
}

/// max(x, 0) under signed encoding: sign bit, then one bit-select lookup per
/// residue wire.
template <class S>
std::vector<typename S::Wire> relu(S& side, const RnsBase& base,
                                   std::span<const typename S::Wire> in) {
    using Wire = typename S::Wire;
    Wire bit = sign(side, base, in);
    std::vector<Wire> out;
    for (size_t i = 0; i < in.size(); ++i)
        out.push_back(side.lookup2(bit, in[i], base.modulus(i),
                                   [](uint32_t b, uint32_t v) { return b * v; }));
    return out;
}

}  // namespace gadget

// ---------------------------------------------------------------------------
// Standalone gadget objects
// ---------------------------------------------------------------------------

enum class GadgetKind : uint8_t { base_extension = 1, scaling = 2, sign = 3, relu = 4 };

struct ScalingSpec {
    RnsBase base;
    uint64_t s = 0;
    std::vector<size_t> drop_positions;
    uint64_t shift_up = 0, shift_down = 0;

    ScalingSpec(RnsBase b, uint64_t factor) : base(std::move(b)), s(factor) {
        drop_positions = scale_drop_positions(base, s);
        uint64_t p = base.product_u64();
        shift_up = p / 2;
        shift_down = p / (2 * s);
    }
};

struct GarbledGadget {
    GadgetKind kind = GadgetKind::base_extension;
    TableStream tables;
    std::vector<WireSecrets> input_secrets;
    std::vector<WireSecrets> output_secrets;

    size_t ciphertext_count() const { return tables.total_rows(); }
};

using ScaleStageSecrets = gadget::ScaleStagesT<WireSecrets>;
using ScaleStageLabels = gadget::ScaleStagesT<Label>;

/// Fresh-wire base extension gadget: inputs are the residues at every
/// position except `target`, output is the single extended wire.
inline GarbledGadget garble_base_extension(GarblingContext& ctx, size_t target) {
    const RnsBase& base = ctx.base();
    require(target < base.size(), Errc::out_of_range, "target outside base");
    GarbledGadget g;
    g.kind = GadgetKind::base_extension;
    std::vector<size_t> alive;
    for (size_t i = 0; i < base.size(); ++i)
        if (i != target) {
            alive.push_back(i);
            g.input_secrets.push_back(fresh_wire(ctx, base.modulus(i)));
        }
    GarbleSide side{ctx, g.tables};
    std::vector<size_t> targets{target};
    auto out = gadget::base_extension(side, base,
                                      std::span<const WireSecrets>(g.input_secrets),
                                      std::span<const size_t>(alive),
                                      std::span<const size_t>(targets));
    g.output_secrets = std::move(out);
    return g;
}

inline Label eval_base_extension(const GarbledGadget& g, const RnsBase& base, size_t target,
                                 std::span<const Label> inputs, uint32_t lambda) {
    EvalSide side{g.tables, lambda};
    std::vector<size_t> alive;
    for (size_t i = 0; i < base.size(); ++i)
        if (i != target) alive.push_back(i);
    std::vector<size_t> targets{target};
    auto out = gadget::base_extension(side, base, inputs, std::span<const size_t>(alive),
                                      std::span<const size_t>(targets));
    return out[0];
}

inline GarbledGadget garble_scaling(GarblingContext& ctx, const ScalingSpec& spec,
                                    ScaleStageSecrets* stages = nullptr) {
    require(spec.base == ctx.base(), Errc::modulus_mismatch, "spec base != context base");
    GarbledGadget g;
    g.kind = GadgetKind::scaling;
    for (size_t i = 0; i < spec.base.size(); ++i)
        g.input_secrets.push_back(fresh_wire(ctx, spec.base.modulus(i)));
    GarbleSide side{ctx, g.tables};
    g.output_secrets = gadget::scaling(side, spec.base,
                                       std::span<const size_t>(spec.drop_positions),
                                       std::span<const WireSecrets>(g.input_secrets), stages);
    return g;
}

inline std::vector<Label> eval_scaling(const GarbledGadget& g, const ScalingSpec& spec,
                                       std::span<const Label> inputs, uint32_t lambda,
                                       ScaleStageLabels* stages = nullptr) {
    EvalSide side{g.tables, lambda};
    return gadget::scaling(side, spec.base, std::span<const size_t>(spec.drop_positions), inputs,
                           stages);
}

/// Dash-style emulation: scaling by 2^ell as ell chained divide-by-two
/// gadgets inside one table stream. Used for cost and runtime comparisons.
inline GarbledGadget garble_scaling_chained(GarblingContext& ctx, uint32_t ell) {
    const RnsBase& base = ctx.base();
    size_t two = SIZE_MAX;
    for (size_t i = 0; i < base.size(); ++i)
        if (base.modulus(i) == 2) two = i;
    require(two != SIZE_MAX, Errc::unrealizable_scale, "chained scaling needs modulus 2");
    GarbledGadget g;
    g.kind = GadgetKind::scaling;
    for (size_t i = 0; i < base.size(); ++i)
        g.input_secrets.push_back(fresh_wire(ctx, base.modulus(i)));
    GarbleSide side{ctx, g.tables};
    std::vector<size_t> drop{two};
    std::vector<WireSecrets> wires = g.input_secrets;
    for (uint32_t step = 0; step < ell; ++step)
        wires = gadget::scaling(side, base, std::span<const size_t>(drop),
                                std::span<const WireSecrets>(wires));
    g.output_secrets = std::move(wires);
    return g;
}

inline std::vector<Label> eval_scaling_chained(const GarbledGadget& g, const RnsBase& base,
                                               uint32_t ell, std::span<const Label> inputs,
                                               uint32_t lambda) {
    size_t two = SIZE_MAX;
    for (size_t i = 0; i < base.size(); ++i)
        if (base.modulus(i) == 2) two = i;
    EvalSide side{g.tables, lambda};
    std::vector<size_t> drop{two};
    std::vector<Label> wires(inputs.begin(), inputs.end());
    for (uint32_t step = 0; step < ell; ++step)
        wires = gadget::scaling(side, base, std::span<const size_t>(drop),
                                std::span<const Label>(wires));
    return wires;
}

inline GarbledGadget garble_sign(GarblingContext& ctx) {
    const RnsBase& base = ctx.base();
    GarbledGadget g;
    g.kind = GadgetKind::sign;
    for (size_t i = 0; i < base.size(); ++i)
        g.input_secrets.push_back(fresh_wire(ctx, base.modulus(i)));
    GarbleSide side{ctx, g.tables};
    g.output_secrets = {gadget::sign(side, base, std::span<const WireSecrets>(g.input_secrets))};
    return g;
}

inline Label eval_sign(const GarbledGadget& g, const RnsBase& base, std::span<const Label> inputs,
                       uint32_t lambda) {
    EvalSide side{g.tables, lambda};
    return gadget::sign(side, base, inputs);
}

inline GarbledGadget garble_relu(GarblingContext& ctx) {
    const RnsBase& base = ctx.base();
    GarbledGadget g;
    g.kind = GadgetKind::relu;
    for (size_t i = 0; i < base.size(); ++i)
        g.input_secrets.push_back(fresh_wire(ctx, base.modulus(i)));
    GarbleSide side{ctx, g.tables};
    g.output_secrets = gadget::relu(side, base, std::span<const WireSecrets>(g.input_secrets));
    return g;
}

inline std::vector<Label> eval_relu(const GarbledGadget& g, const RnsBase& base,
                                    std::span<const Label> inputs, uint32_t lambda) {
    EvalSide side{g.tables, lambda};
    return gadget::relu(side, base, inputs);
}

// Garbler-side helpers for full residue-vector values.
inline std::vector<Label> encode_residues(GarblingContext& ctx,
                                          std::span<const WireSecrets> wires,
                                          std::span<const residue_t> residues) {
    require(wires.size() == residues.size(), Errc::shape_mismatch, "wire/residue count");
    std::vector<Label> out;
    for (size_t i = 0; i < wires.size(); ++i)
        out.push_back(encode_value(ctx, wires[i], residues[i]));
    return out;
}

inline Residues decode_residues(GarblingContext& ctx, std::span<const WireSecrets> wires,
                                std::span<const Label> labels) {
    require(wires.size() == labels.size(), Errc::shape_mismatch, "wire/label count");
    Residues out;
    for (size_t i = 0; i < wires.size(); ++i)
        out.push_back(decode_label(ctx, wires[i], labels[i]));
    return out;
}

}  // namespace agc
