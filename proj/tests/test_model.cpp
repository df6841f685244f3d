#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "agc/infer.hpp"
#include "agc/quantize.hpp"

using namespace agc;

namespace {

// Independent reference evaluator: plain signed 128-bit integers, no residue
// arithmetic anywhere. Valid whenever the model passed range analysis, which
// is exactly when it is compared against the ring path.
std::vector<i128> naive_infer(const QuantizedModel& m, std::span<const int64_t> input) {
    uint64_t p = m.base.product_u64();
    auto floor_div = [](i128 a, i128 b) {
        i128 q = a / b;
        if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
        return q;
    };
    std::vector<i128> x(input.begin(), input.end());
    Shape s = m.input;
    for (const QuantLayer& l : m.layers) {
        switch (l.desc.kind) {
            case LayerKind::dense: {
                std::vector<i128> out(l.desc.outputs);
                for (size_t r = 0; r < l.desc.outputs; ++r) {
                    i128 acc = l.bias[r];
                    for (size_t c = 0; c < s.count(); ++c)
                        acc += i128(l.weights[r * s.count() + c]) * x[c];
                    out[r] = acc;
                }
                x = std::move(out);
                break;
            }
            case LayerKind::conv2d: {
                ConvGeom g(s, l.desc);
                std::vector<i128> out(g.pixels() * g.out_ch);
                for (size_t oy = 0; oy < g.out_h; ++oy)
                    for (size_t ox = 0; ox < g.out_w; ++ox)
                        for (size_t oc = 0; oc < g.out_ch; ++oc) {
                            i128 acc = l.bias[oc];
                            for (size_t fy = 0; fy < g.filter; ++fy)
                                for (size_t fx = 0; fx < g.filter; ++fx)
                                    for (size_t ch = 0; ch < g.in_ch; ++ch) {
                                        size_t y = oy * g.stride + fy;
                                        size_t xx = ox * g.stride + fx;
                                        acc += i128(l.weights[((oc * g.filter + fy) * g.filter +
                                                               fx) * g.in_ch + ch]) *
                                               x[(y * g.in_w + xx) * g.in_ch + ch];
                                    }
                            out[(oy * g.out_w + ox) * g.out_ch + oc] = acc;
                        }
                x = std::move(out);
                break;
            }
            case LayerKind::relu:
                for (auto& v : x) v = v > 0 ? v : 0;
                break;
            case LayerKind::scale: {
                uint64_t sc = l.desc.scale_factor;
                if (m.params.realization == ScaleMode::fused) {
                    i128 delta = i128(p / 2) - i128(sc) * i128(p / (2 * sc));
                    for (auto& v : x) v = floor_div(v + delta, i128(sc));
                } else {
                    for (auto& v : x) {
                        i128 delta = i128(p / 2) - 2 * i128(p / 4);
                        for (uint64_t f = sc; f > 1; f /= 2) v = floor_div(v + delta, 2);
                    }
                }
                break;
            }
        }
        s = layer_output_shape(l.desc, s);
    }
    return x;
}

}  // namespace

TEST_CASE("conv geometry") {
    LayerDescriptor d;
    d.kind = LayerKind::conv2d;
    d.in_ch = 3;
    d.out_ch = 4;
    d.filter = 3;
    d.stride = 1;
    ConvGeom g(Shape{5, 5, 3}, d);
    CHECK(g.out_h == 3);
    CHECK(g.out_w == 3);
    CHECK(g.patch() == 27);
    CHECK(g.pixels() == 9);
    CHECK(g.im2col_indices().size() == 27 * 9);

    d.stride = 2;
    ConvGeom g2(Shape{32, 32, 3}, d);
    CHECK(g2.out_h == 15);

    d.in_ch = 2;
    CHECK_THROWS_AS(ConvGeom(Shape{5, 5, 3}, d), Error);
    d.in_ch = 3;
    d.filter = 6;
    CHECK_THROWS_AS(ConvGeom(Shape{5, 5, 3}, d), Error);
}

TEST_CASE("identity 1x1 conv with zero bias is the identity") {
    RnsBase base = make_base({2, 3, 5, 7});
    FloatModel m;
    m.input = Shape{3, 3, 1};
    FloatLayer conv;
    conv.desc.kind = LayerKind::conv2d;
    conv.desc.in_ch = 1;
    conv.desc.out_ch = 1;
    conv.desc.filter = 1;
    conv.desc.stride = 1;
    conv.weights = {1.0};
    conv.bias = {0.0};
    m.layers.push_back(conv);
    QuantizedModel q = simple_quant(m, 1.0, base);
    std::vector<int64_t> input{3, 1, 4, -1, 5, -9, 2, 6, -5};
    CHECK(plaintext_infer(q, input) == input);
}

TEST_CASE("dense with unit weight row sums the inputs") {
    RnsBase base = make_base({2, 3, 5, 7});
    FloatModel m;
    m.input = Shape{1, 1, 4};
    FloatLayer d;
    d.desc.kind = LayerKind::dense;
    d.desc.outputs = 1;
    d.weights = {1.0, 1.0, 1.0, 1.0};
    d.bias = {0.0};
    m.layers.push_back(d);
    QuantizedModel q = simple_quant(m, 1.0, base);
    std::vector<int64_t> input{7, -2, 3, 1};
    CHECK(plaintext_infer(q, input) == std::vector<int64_t>{9});
}

TEST_CASE("relu and scale layer semantics") {
    RnsBase base = make_base({2, 3, 5});
    FloatModel m;
    m.input = Shape{1, 1, 1};
    FloatLayer d;
    d.desc.kind = LayerKind::dense;
    d.desc.outputs = 1;
    d.weights = {1.0};
    d.bias = {0.0};
    m.layers.push_back(d);
    FloatLayer r;
    r.desc.kind = LayerKind::relu;
    m.layers.push_back(r);
    QuantizedModel q = scale_quant_plus(m, 5, base);
    // layers: dense (weights scaled by 5), scale(5), relu — the rescale undoes
    // the weight scaling, so end to end this is relu(v) for in-range v.
    for (int64_t v : {-2, -1, 0, 1, 2}) {
        std::vector<int64_t> out = plaintext_infer(q, std::vector<int64_t>{v});
        CHECK(out[0] == std::max<int64_t>(v, 0));
    }
}

TEST_CASE("plaintext inference matches naive wide-integer reference") {
    std::mt19937_64 gen(0xabcdef);
    RnsBase base = make_base({2, 3, 5, 7, 11});
    for (int trial = 0; trial < 40; ++trial) {
        FloatModel m;
        m.input = Shape{3, 3, 1};
        FloatLayer conv;
        conv.desc.kind = LayerKind::conv2d;
        conv.desc.in_ch = 1;
        conv.desc.out_ch = 2;
        conv.desc.filter = 2;
        conv.desc.stride = 1;
        m.layers.push_back(conv);
        FloatLayer relu;
        relu.desc.kind = LayerKind::relu;
        m.layers.push_back(relu);
        FloatLayer dense;
        dense.desc.kind = LayerKind::dense;
        dense.desc.outputs = 3;
        m.layers.push_back(dense);
        init_random_weights(m, gen());

        QuantizedModel q = scale_quant_plus(m, 6, base);
        REQUIRE(check_range(q, 4).pass);
        std::vector<int64_t> input(m.input.count());
        for (auto& v : input) v = int64_t(gen() % 9) - 4;
        auto ring = plaintext_infer(q, input);
        auto naive = naive_infer(q, input);
        REQUIRE(ring.size() == naive.size());
        for (size_t i = 0; i < ring.size(); ++i) REQUIRE(i128(ring[i]) == naive[i]);
    }
}

TEST_CASE("direct convolution equals im2col matmul") {
    std::mt19937_64 gen(42);
    for (int trial = 0; trial < 200; ++trial) {
        size_t in_h = 2 + gen() % 6;
        size_t in_w = 2 + gen() % 6;
        size_t in_ch = 1 + gen() % 3;
        LayerDescriptor d;
        d.kind = LayerKind::conv2d;
        d.in_ch = in_ch;
        d.out_ch = 1 + gen() % 4;
        d.filter = 1 + gen() % std::min(in_h, in_w);
        d.stride = 1 + gen() % 2;
        ConvGeom g(Shape{in_h, in_w, in_ch}, d);
        uint64_t p = 9973;
        RingVec weights(d.out_ch * g.patch());
        RingVec bias(d.out_ch);
        RingVec input(in_h * in_w * in_ch);
        for (auto& v : weights) v = gen() % p;
        for (auto& v : bias) v = gen() % p;
        for (auto& v : input) v = gen() % p;
        REQUIRE(conv2d_direct(g, weights, bias, input, p) ==
                conv2d_matmul(g, weights, bias, input, p));
    }
}

TEST_CASE("manifest round trip with weight blob") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "agc_manifest_test";
    fs::create_directories(dir);

    FloatModel m;
    m.name = "toy";
    m.input = Shape{4, 4, 2};
    FloatLayer conv;
    conv.desc.kind = LayerKind::conv2d;
    conv.desc.in_ch = 2;
    conv.desc.out_ch = 3;
    conv.desc.filter = 2;
    conv.desc.stride = 2;
    m.layers.push_back(conv);
    FloatLayer relu;
    relu.desc.kind = LayerKind::relu;
    m.layers.push_back(relu);
    FloatLayer dense;
    dense.desc.kind = LayerKind::dense;
    dense.desc.outputs = 5;
    m.layers.push_back(dense);
    init_random_weights(m, 99);
    save_weights_blob(m, dir / "toy.bin");

    std::ofstream jf(dir / "toy.json");
    jf << R"({"name":"toy","input":[4,4,2],"weights_file":"toy.bin","layers":[
      {"type":"conv2d","in_ch":2,"out_ch":3,"filter":2,"stride":2},
      {"type":"relu"},
      {"type":"dense","outputs":5}]})";
    jf.close();

    FloatModel loaded = load_manifest(dir / "toy.json");
    CHECK(loaded.name == "toy");
    CHECK(loaded.input == m.input);
    REQUIRE(loaded.layers.size() == 3);
    REQUIRE(loaded.layers[0].weights.size() == m.layers[0].weights.size());
    for (size_t i = 0; i < m.layers[0].weights.size(); ++i)
        CHECK(loaded.layers[0].weights[i] == Catch::Approx(m.layers[0].weights[i]).margin(1e-6));
    CHECK(loaded.output_shape() == Shape{1, 1, 5});

    CHECK_THROWS_AS(load_manifest(dir / "missing.json"), Error);
}
