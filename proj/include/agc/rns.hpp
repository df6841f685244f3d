#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "agc/errors.hpp"

namespace agc {

using residue_t = uint32_t;
using u128 = unsigned __int128;
using i128 = __int128;

using Residues = std::vector<residue_t>;
using MrsDigits = std::vector<residue_t>;

namespace detail {

inline int64_t egcd(int64_t a, int64_t b, int64_t& x, int64_t& y) {
    if (b == 0) {
        x = 1;
        y = 0;
        return a;
    }
    int64_t x1, y1;
    int64_t g = egcd(b, a % b, x1, y1);
    x = y1;
    y = x1 - (a / b) * y1;
    return g;
}

inline residue_t inv_mod(uint64_t a, uint32_t m) {
    a %= m;
    int64_t x, y;
    int64_t g = egcd(int64_t(a), int64_t(m), x, y);
    require(g == 1, Errc::internal, "inverse does not exist");
    int64_t r = x % int64_t(m);
    if (r < 0) r += m;
    return residue_t(r);
}

}  // namespace detail

// Ordered pairwise-coprime moduli with the constants every conversion needs:
// the full product, partial products and the cross inverses p_j^{-1} mod p_i.
// Moduli need not be prime; (32, 167, 173) is a legal base.
class RnsBase {
  public:
    RnsBase() = default;

    explicit RnsBase(std::vector<residue_t> moduli) : moduli_(std::move(moduli)) {
        require(!moduli_.empty(), Errc::modulus_too_small, "empty base");
        for (residue_t p : moduli_)
            require(p >= 2, Errc::modulus_too_small, "modulus " + std::to_string(p) + " < 2");
        for (size_t i = 0; i < moduli_.size(); ++i)
            for (size_t j = i + 1; j < moduli_.size(); ++j)
                require(std::gcd(moduli_[i], moduli_[j]) == 1, Errc::non_coprime,
                        "gcd(" + std::to_string(moduli_[i]) + "," + std::to_string(moduli_[j]) +
                            ") != 1");

        partial_.resize(moduli_.size());
        u128 prod = 1;
        for (size_t i = 0; i < moduli_.size(); ++i) {
            u128 next = prod * moduli_[i];
            require(next / moduli_[i] == prod && next < (u128(1) << 126), Errc::out_of_range,
                    "base product overflows");
            prod = next;
            partial_[i] = prod;
        }
        product_ = prod;

        size_t k = moduli_.size();
        inv_.assign(k * k, 0);
        for (size_t i = 0; i < k; ++i)
            for (size_t j = 0; j < k; ++j)
                if (i != j) inv_[i * k + j] = detail::inv_mod(moduli_[j], moduli_[i]);
    }

    size_t size() const { return moduli_.size(); }
    residue_t modulus(size_t i) const { return moduli_[i]; }
    const std::vector<residue_t>& moduli() const { return moduli_; }

    u128 product() const { return product_; }
    // P_{i+1} = p_0 * ... * p_i
    u128 partial_product(size_t i) const { return partial_[i]; }

    // p_j^{-1} mod p_i
    residue_t inv(size_t j, size_t i) const { return inv_[i * moduli_.size() + j]; }

    uint64_t product_u64() const {
        require(product_ <= u128(UINT64_MAX), Errc::out_of_range, "base product exceeds 64 bits");
        return uint64_t(product_);
    }

    // Signed encoding: canonical values below ceil(P/2) are non-negative, the
    // upper half holds the negatives (0,1,2,-2,-1) -> (0,1,2,3,4).
    u128 positive_bound() const { return (product_ + 1) / 2; }

    int64_t max_signed() const { return int64_t(uint64_t(positive_bound()) - 1); }
    int64_t min_signed() const { return -int64_t(uint64_t(product_ / 2)); }

    uint64_t encode_signed(int64_t v) const {
        uint64_t p = product_u64();
        require(v >= min_signed() && v <= max_signed(), Errc::range_overflow,
                "value " + std::to_string(v) + " not representable");
        return v >= 0 ? uint64_t(v) : p - uint64_t(-v);
    }

    int64_t decode_signed(uint64_t x) const {
        uint64_t p = product_u64();
        require(x < p, Errc::out_of_range, "canonical value out of ring");
        return x < uint64_t(positive_bound()) ? int64_t(x) : int64_t(x) - int64_t(p);
    }

    bool operator==(const RnsBase& o) const { return moduli_ == o.moduli_; }

  private:
    std::vector<residue_t> moduli_;
    std::vector<u128> partial_;
    u128 product_ = 1;
    std::vector<residue_t> inv_;
};

inline RnsBase make_base(std::vector<residue_t> moduli) { return RnsBase(std::move(moduli)); }

// Parses the CLI base syntax "32,167,173".
inline std::vector<residue_t> parse_base_list(const std::string& csv) {
    std::vector<residue_t> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        size_t pos = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(tok, &pos);
        } catch (const std::exception&) {
            fail(Errc::out_of_range, "bad modulus '" + tok + "'");
        }
        require(pos == tok.size() && v >= 2 && v <= UINT32_MAX, Errc::out_of_range,
                "bad modulus '" + tok + "'");
        out.push_back(residue_t(v));
    }
    require(!out.empty(), Errc::out_of_range, "empty base list");
    return out;
}

inline Residues to_residues(const RnsBase& base, u128 x) {
    require(x < base.product(), Errc::out_of_range, "value not reduced modulo base product");
    Residues r(base.size());
    for (size_t i = 0; i < base.size(); ++i) r[i] = residue_t(x % base.modulus(i));
    return r;
}

/// RNS -> associated-MRS digit extraction. Step i consumes digit
/// d_i = [z_i]_i and updates the remaining tracks via
/// [z_{i+1}]_j = ([z_i]_j - d_i) * p_i^{-1} mod p_j.
inline MrsDigits to_mrs(const RnsBase& base, std::span<const residue_t> residues) {
    require(residues.size() == base.size(), Errc::shape_mismatch, "residue count != base size");
    size_t k = base.size();
    Residues z(residues.begin(), residues.end());
    MrsDigits d(k);
    for (size_t i = 0; i < k; ++i) {
        d[i] = z[i];
        for (size_t j = i + 1; j < k; ++j) {
            uint64_t pj = base.modulus(j);
            uint64_t diff = (uint64_t(z[j]) + pj - z[i] % pj) % pj;
            z[j] = residue_t(diff * base.inv(i, j) % pj);
        }
    }
    return d;
}

inline u128 from_mrs(const RnsBase& base, std::span<const residue_t> digits) {
    require(digits.size() == base.size(), Errc::shape_mismatch, "digit count != base size");
    u128 x = 0;
    u128 w = 1;
    for (size_t i = 0; i < base.size(); ++i) {
        x += w * digits[i];
        w *= base.modulus(i);
    }
    return x;
}

// Garner-style CRT reconstruction through the associated MRS; avoids any
// intermediate wider than the final product.
inline u128 from_residues(const RnsBase& base, std::span<const residue_t> residues) {
    return from_mrs(base, to_mrs(base, residues));
}

/// Recovers the residue of y at `target` from its residues at the `known`
/// positions, valid whenever y < prod(known moduli). The target track starts
/// from the constant zero residue, absorbs every extracted digit via
/// t <- (t - d_i) * q_i^{-1} mod p_t, and ends holding the zero-filled
/// value's top MRS digit; multiplying by -prod(q) mod p_t yields [y]_target.
inline residue_t base_extend(const RnsBase& base, std::span<const residue_t> known_residues,
                             std::span<const size_t> known_positions, size_t target) {
    require(known_residues.size() == known_positions.size(), Errc::shape_mismatch,
            "residue/position count mismatch");
    require(target < base.size(), Errc::out_of_range, "target position out of base");
    uint64_t pt = base.modulus(target);

    size_t m = known_positions.size();
    Residues track(known_residues.begin(), known_residues.end());
    uint64_t tgt = 0;
    uint64_t prod_mod_pt = 1;
    for (size_t n = 0; n < m; ++n) {
        size_t i = known_positions[n];
        require(i != target, Errc::out_of_range, "target listed as known");
        uint64_t d = track[n];
        for (size_t jn = n + 1; jn < m; ++jn) {
            size_t j = known_positions[jn];
            uint64_t pj = base.modulus(j);
            uint64_t diff = (track[jn] + pj - d % pj) % pj;
            track[jn] = residue_t(diff * base.inv(i, j) % pj);
        }
        uint64_t diff = (tgt + pt - d % pt) % pt;
        tgt = diff * base.inv(i, target) % pt;
        prod_mod_pt = prod_mod_pt * (base.modulus(i) % pt) % pt;
    }
    return residue_t(tgt * ((pt - prod_mod_pt) % pt) % pt);
}

// Common case: residues at positions 0..k-2, extend to the last modulus.
inline residue_t base_extend(const RnsBase& base, std::span<const residue_t> first_residues) {
    require(first_residues.size() + 1 == base.size(), Errc::shape_mismatch,
            "expected k-1 residues");
    std::vector<size_t> known(base.size() - 1);
    std::iota(known.begin(), known.end(), size_t(0));
    return base_extend(base, first_residues, known, base.size() - 1);
}

// ---------------------------------------------------------------------------
// Scaling
// ---------------------------------------------------------------------------

// Finds the subset of base positions whose moduli multiply to s.
inline std::vector<size_t> scale_drop_positions(const RnsBase& base, uint64_t s) {
    require(s >= 2, Errc::invalid_scale_factor, "scale factor must be >= 2");
    std::vector<size_t> picked;
    uint64_t rem = s;
    // moduli are pairwise coprime, so greedy division is unambiguous
    for (size_t i = 0; i < base.size() && rem > 1; ++i) {
        if (rem % base.modulus(i) == 0) {
            picked.push_back(i);
            rem /= base.modulus(i);
        }
    }
    require(rem == 1, Errc::invalid_scale_factor,
            std::to_string(s) + " is not a product of distinct base moduli");
    return picked;
}

// Intermediate wire values of one scaling pass; mirrors the columns of the
// gadget's step-by-step example and is asserted against the garbled circuit.
struct ScaleTrace {
    uint64_t x = 0;        // canonical input
    uint64_t x_up = 0;     // after shift-up
    Residues phi_x;        // residues of x
    Residues phi_x_up;     // residues of x_up
    Residues y_prime;      // post-division residues, zeros at dropped positions
    uint64_t y_prime_val;  // value represented by y_prime over the full base
    uint64_t y = 0;        // scaled value after base extension
    Residues phi_y;
    Residues phi_y_down;
    uint64_t y_down = 0;  // canonical output
};

/// One fused scaling pass over canonical Z_P: shift up by floor(P/2), divide
/// by s = prod(dropped moduli) per residue, base-extend every dropped
/// position back, shift down by floor(P/(2s)). This is the exact semantics
/// the garbled gadget implements and the oracle it is tested against.
inline uint64_t scale_canonical(const RnsBase& base, uint64_t x, std::span<const size_t> drop,
                                ScaleTrace* trace = nullptr) {
    uint64_t p_all = base.product_u64();
    require(x < p_all, Errc::out_of_range, "input not reduced");
    require(!drop.empty(), Errc::invalid_scale_factor, "empty drop set");
    require(drop.size() < base.size(), Errc::invalid_scale_factor, "cannot drop entire base");

    uint64_t s = 1;
    for (size_t t : drop) s *= base.modulus(t);
    uint64_t up = p_all / 2;
    uint64_t down = p_all / (2 * s);

    uint64_t x_up = (x + up) % p_all;
    Residues res = to_residues(base, x_up);
    if (trace) {
        trace->x = x;
        trace->phi_x = to_residues(base, x);
        trace->x_up = x_up;
        trace->phi_x_up = res;
    }

    std::vector<size_t> alive(base.size());
    std::iota(alive.begin(), alive.end(), size_t(0));
    for (size_t t : drop) {
        uint64_t d = res[t];
        alive.erase(std::find(alive.begin(), alive.end(), t));
        for (size_t j : alive) {
            uint64_t pj = base.modulus(j);
            uint64_t diff = (res[j] + pj - d % pj) % pj;
            res[j] = residue_t(diff * base.inv(t, j) % pj);
        }
        res[t] = 0;
    }

    if (trace) {
        trace->y_prime = res;
        trace->y_prime_val = uint64_t(from_residues(base, res));
    }

    Residues survivors;
    for (size_t j : alive) survivors.push_back(res[j]);
    for (size_t t : drop)
        res[t] = base_extend(base, survivors, alive, t);

    if (trace) {
        trace->phi_y = res;
        trace->y = uint64_t(from_residues(base, res));
    }

    for (size_t i = 0; i < base.size(); ++i) {
        uint64_t pi = base.modulus(i);
        res[i] = residue_t((res[i] + pi - down % pi) % pi);
    }
    uint64_t out = uint64_t(from_residues(base, res));
    if (trace) {
        trace->phi_y_down = res;
        trace->y_down = out;
    }
    return out;
}

enum class ScaleMode {
    fused,         // single gadget dropping all s-moduli at once
    chained_pow2,  // s = 2^l as l consecutive divide-by-two passes
};

inline uint64_t scale_canonical(const RnsBase& base, uint64_t x, uint64_t s,
                                ScaleMode mode = ScaleMode::fused) {
    if (mode == ScaleMode::fused) {
        auto drop = scale_drop_positions(base, s);
        return scale_canonical(base, x, drop);
    }
    // chained: s must be a power of two and the base must contain modulus 2
    require((s & (s - 1)) == 0 && s >= 2, Errc::unrealizable_scale,
            "chained mode needs a power-of-two factor");
    size_t two = SIZE_MAX;
    for (size_t i = 0; i < base.size(); ++i)
        if (base.modulus(i) == 2) two = i;
    require(two != SIZE_MAX, Errc::unrealizable_scale, "chained mode needs modulus 2 in base");
    std::vector<size_t> drop{two};
    uint64_t v = x;
    for (uint64_t f = s; f > 1; f /= 2) v = scale_canonical(base, v, drop);
    return v;
}

/// Signed view of the scaling gadget. For even P with 2s | P this is exactly
/// floor(v / s) (floor toward minus infinity, matching the gadget's
/// step-by-step example); otherwise the flooring of the two shift constants
/// introduces an offset of delta = floor(P/2) - s*floor(P/(2s)), giving
/// floor((v + delta) / s).
inline int64_t scale_signed_plain(const RnsBase& base, int64_t v, uint64_t s,
                                  ScaleMode mode = ScaleMode::fused) {
    uint64_t x = base.encode_signed(v);
    return base.decode_signed(scale_canonical(base, x, s, mode));
}

}  // namespace agc
