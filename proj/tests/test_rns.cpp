#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <numeric>
#include <vector>

#include "agc/rns.hpp"

using namespace agc;

namespace {

// Independent CRT oracle: scan the full ring for the unique match.
uint64_t crt_brute_force(const std::vector<residue_t>& moduli,
                         const std::vector<residue_t>& residues) {
    uint64_t prod = 1;
    for (auto m : moduli) prod *= m;
    for (uint64_t x = 0; x < prod; ++x) {
        bool ok = true;
        for (size_t i = 0; i < moduli.size(); ++i)
            if (x % moduli[i] != residues[i]) {
                ok = false;
                break;
            }
        if (ok) return x;
    }
    FAIL("no CRT solution");
    return 0;
}

}  // namespace

TEST_CASE("make_base validates moduli") {
    RnsBase b = make_base({2, 3, 5});
    CHECK(b.product_u64() == 30);
    CHECK(b.partial_product(0) == 2);
    CHECK(b.partial_product(1) == 6);

    // composite moduli are fine as long as they are pairwise coprime
    RnsBase f = make_base({32, 167, 173});
    CHECK(f.product_u64() == 924512);

    CHECK_THROWS_MATCHES(make_base({4, 6}), Error, Catch::Matchers::Predicate<Error>([](
                             const Error& e) { return e.code() == Errc::non_coprime; }));
    CHECK_THROWS_MATCHES(make_base({1, 3}), Error, Catch::Matchers::Predicate<Error>([](
                             const Error& e) { return e.code() == Errc::modulus_too_small; }));
}

TEST_CASE("base inverses satisfy v * p_j == 1 mod p_i") {
    for (auto moduli : {std::vector<residue_t>{2, 3, 5}, {32, 167, 173}, {4, 9, 5, 7}}) {
        RnsBase b = make_base(moduli);
        for (size_t i = 0; i < b.size(); ++i)
            for (size_t j = 0; j < b.size(); ++j) {
                if (i == j) continue;
                uint64_t v = b.inv(j, i);
                CHECK(v * b.modulus(j) % b.modulus(i) == 1);
            }
    }
}

TEST_CASE("to_residues") {
    RnsBase b = make_base({2, 3, 5});
    CHECK(to_residues(b, 23) == Residues{1, 2, 3});
    CHECK(to_residues(b, 0) == Residues{0, 0, 0});
    RnsBase b2 = make_base({2, 3});
    CHECK(to_residues(b2, 4) == Residues{0, 1});
    CHECK_THROWS_AS(to_residues(b2, 6), Error);
}

TEST_CASE("from_residues round trip, exhaustive") {
    for (auto moduli : {std::vector<residue_t>{2, 3, 5}, {3, 5, 7}, {4, 9, 5}, {2, 3, 5, 7, 11}}) {
        RnsBase b = make_base(moduli);
        uint64_t p = b.product_u64();
        for (uint64_t x = 0; x < p; ++x) {
            REQUIRE(uint64_t(from_residues(b, to_residues(b, x))) == x);
        }
    }
}

TEST_CASE("from_residues matches brute force CRT") {
    RnsBase b = make_base({2, 3, 5});
    CHECK(uint64_t(from_residues(b, Residues{1, 2, 3})) == 23);
    CHECK(crt_brute_force({2, 3, 5}, {1, 2, 3}) == 23);
    CHECK(uint64_t(from_residues(b, Residues{0, 0, 0})) == 0);
    RnsBase b2 = make_base({2, 3});
    CHECK(uint64_t(from_residues(b2, Residues{1, 0})) == 3);
}

TEST_CASE("mixed radix digits") {
    RnsBase b = make_base({2, 3, 5});
    // 23 = 1 + 2*2 + 3*6
    CHECK(to_mrs(b, to_residues(b, 23)) == MrsDigits{1, 2, 3});
    CHECK(to_mrs(b, to_residues(b, 0)) == MrsDigits{0, 0, 0});
    // ring maximum: 29 = 1 + 2*2 + 4*6
    CHECK(to_mrs(b, to_residues(b, 29)) == MrsDigits{1, 2, 4});

    SECTION("reconstruction identity over several bases") {
        for (auto moduli : {std::vector<residue_t>{2, 3, 5}, {3, 5, 7}, {4, 9, 5}}) {
            RnsBase base = make_base(moduli);
            for (uint64_t x = 0; x < base.product_u64(); ++x) {
                auto d = to_mrs(base, to_residues(base, x));
                REQUIRE(uint64_t(from_mrs(base, d)) == x);
            }
        }
    }
}

TEST_CASE("base_extend recovers the missing residue") {
    RnsBase b = make_base({2, 3, 5});
    // y = 4 < 6: residues (0, 1) extend to 4 mod 5
    CHECK(base_extend(b, Residues{0, 1}) == 4);
    CHECK(base_extend(b, Residues{0, 0}) == 0);
    RnsBase b2 = make_base({2, 3});
    CHECK(base_extend(b2, Residues{1}) == 1);

    SECTION("exhaustive against direct reduction") {
        for (auto moduli :
             {std::vector<residue_t>{2, 3}, {2, 3, 5}, {3, 5, 7}, {4, 9, 5}, {2, 3, 5, 7, 11}}) {
            RnsBase base = make_base(moduli);
            uint64_t bound = uint64_t(base.partial_product(base.size() - 2));
            for (uint64_t y = 0; y < bound; ++y) {
                Residues known(base.size() - 1);
                for (size_t i = 0; i + 1 < base.size(); ++i)
                    known[i] = residue_t(y % base.modulus(i));
                REQUIRE(base_extend(base, known) == y % base.modulus(base.size() - 1));
            }
        }
    }

    SECTION("any target position") {
        RnsBase base = make_base({2, 3, 5, 7});
        for (size_t target = 0; target < base.size(); ++target) {
            std::vector<size_t> known;
            uint64_t bound = 1;
            for (size_t i = 0; i < base.size(); ++i)
                if (i != target) {
                    known.push_back(i);
                    bound *= base.modulus(i);
                }
            for (uint64_t y = 0; y < bound; ++y) {
                Residues res;
                for (size_t i : known) res.push_back(residue_t(y % base.modulus(i)));
                REQUIRE(base_extend(base, res, known, target) == y % base.modulus(target));
            }
        }
    }
}

TEST_CASE("signed encoding") {
    RnsBase b = make_base({2, 3});  // P = 6: values -3..2
    CHECK(b.encode_signed(0) == 0);
    CHECK(b.encode_signed(2) == 2);
    CHECK(b.encode_signed(-1) == 5);
    CHECK(b.encode_signed(-2) == 4);
    CHECK(b.encode_signed(-3) == 3);
    CHECK(b.decode_signed(3) == -3);
    CHECK_THROWS_AS(b.encode_signed(3), Error);

    RnsBase b5 = make_base({5});  // (0,1,2,-2,-1) -> (0,1,2,3,4)
    for (int64_t v : {0, 1, 2}) CHECK(b5.encode_signed(v) == uint64_t(v));
    CHECK(b5.encode_signed(-2) == 3);
    CHECK(b5.encode_signed(-1) == 4);

    SECTION("round trip over full rings") {
        for (auto moduli : {std::vector<residue_t>{2, 3, 5}, {3, 5, 7}, {32, 167, 173}}) {
            RnsBase base = make_base(moduli);
            for (int64_t v = base.min_signed(); v <= base.max_signed();
                 v += std::max<int64_t>(1, base.product_u64() / 1000)) {
                REQUIRE(base.decode_signed(base.encode_signed(v)) == v);
            }
        }
    }
}

TEST_CASE("per-residue scaling identity") {
    // Dividing x - (x mod p_k) by p_k on each remaining residue yields the
    // residues of floor(x / p_k); reconstruct via base extension and compare.
    RnsBase b = make_base({2, 3, 5});
    size_t k = b.size() - 1;
    uint64_t pk = b.modulus(k);
    for (uint64_t x = 0; x < b.product_u64(); ++x) {
        Residues r = to_residues(b, x);
        Residues scaled(k);
        std::vector<size_t> alive(k);
        std::iota(alive.begin(), alive.end(), size_t(0));
        for (size_t i = 0; i < k; ++i) {
            uint64_t pi = b.modulus(i);
            scaled[i] = residue_t((r[i] + pi - r[k] % pi) % pi * b.inv(k, i) % pi);
        }
        Residues full = scaled;
        full.push_back(base_extend(b, scaled, alive, k));
        REQUIRE(uint64_t(from_residues(b, full)) == x / pk);
    }
}

TEST_CASE("scale_drop_positions") {
    RnsBase b = make_base({2, 3, 5});
    CHECK(scale_drop_positions(b, 3) == std::vector<size_t>{1});
    CHECK(scale_drop_positions(b, 6) == std::vector<size_t>{0, 1});
    CHECK(scale_drop_positions(b, 30) == std::vector<size_t>{0, 1, 2});
    CHECK_THROWS_MATCHES(scale_drop_positions(b, 7), Error, Catch::Matchers::Predicate<Error>([](
                             const Error& e) { return e.code() == Errc::invalid_scale_factor; }));
    CHECK_THROWS_AS(scale_drop_positions(b, 4), Error);  // 4 = 2*2, not distinct moduli
}

TEST_CASE("scaling gadget semantics, step-by-step golden values") {
    // Scaling factor 3 over base (2,3): all six ring elements, every stage.
    RnsBase b = make_base({2, 3});
    struct Row {
        uint64_t x, x_up;
        Residues y_prime;
        uint64_t y_prime_val, y;
        Residues phi_y, phi_y_down;
        uint64_t y_down;
        int64_t y_down_signed;
    };
    const Row rows[] = {
        {0, 3, {1, 0}, 3, 1, {1, 1}, {0, 0}, 0, 0},
        {1, 4, {1, 0}, 3, 1, {1, 1}, {0, 0}, 0, 0},
        {2, 5, {1, 0}, 3, 1, {1, 1}, {0, 0}, 0, 0},
        {3, 0, {0, 0}, 0, 0, {0, 0}, {1, 2}, 5, -1},
        {4, 1, {0, 0}, 0, 0, {0, 0}, {1, 2}, 5, -1},
        {5, 2, {0, 0}, 0, 0, {0, 0}, {1, 2}, 5, -1},
    };
    std::vector<size_t> drop{1};
    for (const Row& row : rows) {
        ScaleTrace tr;
        uint64_t out = scale_canonical(b, row.x, drop, &tr);
        CAPTURE(row.x);
        CHECK(tr.x_up == row.x_up);
        CHECK(tr.y_prime == row.y_prime);
        CHECK(tr.y_prime_val == row.y_prime_val);
        CHECK(tr.y == row.y);
        CHECK(tr.phi_y == row.phi_y);
        CHECK(tr.phi_y_down == row.phi_y_down);
        CHECK(out == row.y_down);
        CHECK(b.decode_signed(out) == row.y_down_signed);
    }
}

TEST_CASE("scale_signed_plain is floor division when 2s divides P") {
    for (auto [moduli, s] : std::vector<std::pair<std::vector<residue_t>, uint64_t>>{
             {{2, 3}, 3}, {{2, 3, 5}, 5}, {{2, 3, 5}, 15}, {{2, 3, 5, 7}, 21}}) {
        RnsBase b = make_base(moduli);
        REQUIRE(b.product_u64() % (2 * s) == 0);
        for (int64_t v = b.min_signed(); v <= b.max_signed(); ++v) {
            int64_t got = scale_signed_plain(b, v, s);
            int64_t want = v >= 0 ? v / int64_t(s)
                                  : -int64_t((uint64_t(-v) + s - 1) / s);  // floor toward -inf
            REQUIRE(got == want);
        }
    }
}

TEST_CASE("scale_signed_plain with flooring shifts (odd or indivisible P)") {
    // When floor(P/2) or floor(P/(2s)) are inexact the end-to-end map becomes
    // floor((v + delta)/s) with delta = floor(P/2) - s*floor(P/(2s)).
    for (auto [moduli, s] : std::vector<std::pair<std::vector<residue_t>, uint64_t>>{
             {{3, 5, 7}, 3}, {{3, 5, 7}, 15}, {{32, 167, 173}, 32}}) {
        RnsBase b = make_base(moduli);
        uint64_t p = b.product_u64();
        int64_t delta = int64_t(p / 2) - int64_t(s * (p / (2 * s)));
        int64_t step = std::max<int64_t>(1, int64_t(p) / 2000);
        for (int64_t v = b.min_signed(); v <= b.max_signed(); v += step) {
            int64_t shifted = v + delta;
            int64_t want = shifted >= 0 ? shifted / int64_t(s)
                                        : -int64_t((uint64_t(-shifted) + s - 1) / s);
            REQUIRE(scale_signed_plain(b, v, s) == want);
        }
    }
}

TEST_CASE("chained power-of-two scaling equals repeated halving") {
    RnsBase b = make_base({2, 3, 5, 7});
    for (uint64_t x = 0; x < b.product_u64(); x += 7) {
        uint64_t v = scale_canonical(b, x, uint64_t(4), ScaleMode::chained_pow2);
        uint64_t w = scale_canonical(b, x, std::vector<size_t>{0});
        w = scale_canonical(b, w, std::vector<size_t>{0});
        REQUIRE(v == w);
    }
    RnsBase no_two = make_base({3, 5, 7});
    CHECK_THROWS_AS(scale_canonical(no_two, 1, uint64_t(4), ScaleMode::chained_pow2), Error);
}

TEST_CASE("parse_base_list") {
    CHECK(parse_base_list("32,167,173") == std::vector<residue_t>{32, 167, 173});
    CHECK_THROWS_AS(parse_base_list("2,x"), Error);
    CHECK_THROWS_AS(parse_base_list("2,,3"), Error);
}
