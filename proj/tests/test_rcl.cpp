#include <cmath>
#include <vector>

#include "doctest.h"
#include "hbnet/gradcheck.hpp"
#include "hbnet/rcl.hpp"
#include "test_support.hpp"

using namespace hbnet;
using test_support::bits_equal;
using test_support::max_abs_diff;
using test_support::random_tensor;

namespace {

struct StackWeights {
    Tensor kb1, b1, kl1, kt1;
    Tensor kb2, b2, kl2;
    Tensor kro, bro;
};

StackWeights random_weights(i64 c1, i64 c2, i64 n_out, u64 seed) {
    const u64 key = rng::key_from_seed(seed);
    StackWeights w;
    w.kb1 = random_tensor({c1, 1, 3, 3}, rng::split(key, 0), -0.4, 0.4, true);
    w.b1 = random_tensor({c1}, rng::split(key, 1), -0.1, 0.1, true);
    w.kl1 = random_tensor({c1, c1, 3, 3}, rng::split(key, 2), -0.3, 0.3, true);
    w.kt1 = random_tensor({c2, c1, 3, 3}, rng::split(key, 3), -0.3, 0.3, true);
    w.kb2 = random_tensor({c2, c1, 3, 3}, rng::split(key, 4), -0.3, 0.3, true);
    w.b2 = random_tensor({c2}, rng::split(key, 5), -0.1, 0.1, true);
    w.kl2 = random_tensor({c2, c2, 3, 3}, rng::split(key, 6), -0.2, 0.2, true);
    w.kro = random_tensor({n_out, c2, 3, 3}, rng::split(key, 7), -0.3, 0.3, true);
    w.bro = random_tensor({n_out}, rng::split(key, 8), -0.1, 0.1, true);
    return w;
}

LayerStack make_stack(const StackWeights& w, WiringMode mode) {
    LayerStack stack;
    stack.mode = mode;
    RclLayer l1;
    l1.index = 1;
    l1.bottom_up.kernel = w.kb1;
    l1.bottom_up.bias = w.b1;
    if (mode_has_lateral(mode)) {
        ConvParams lat;
        lat.kernel = w.kl1;
        l1.lateral = lat;
    }
    if (mode_has_topdown(mode)) {
        ConvParams td;
        td.kernel = w.kt1;
        l1.top_down = td;
    }
    stack.layers.push_back(l1);
    RclLayer l2;
    l2.index = 2;
    l2.bottom_up.kernel = w.kb2;
    l2.bottom_up.bias = w.b2;
    if (mode_has_lateral(mode)) {
        ConvParams lat;
        lat.kernel = w.kl2;
        l2.lateral = lat;
    }
    stack.layers.push_back(l2);
    stack.out_conv.kernel = w.kro;
    stack.out_conv.bias = w.bro;
    return stack;
}

ConvParams zero_bias_params(const Tensor& kernel, i64 cout) {
    ConvParams p;
    p.kernel = kernel;
    p.bias = Tensor::zeros({cout});
    return p;
}

}  // namespace

TEST_CASE("preactivation in mode B reduces to a standard convolutional layer") {
    auto w = random_weights(3, 5, 2, 1);
    auto stack = make_stack(w, WiringMode::B);
    auto x = random_tensor({2, 1, 7, 7}, 100);
    Tensor z = preactivation(nullptr, stack.layers[0], x, nullptr, nullptr, WiringMode::B);
    Tensor ref = conv2d(nullptr, x, stack.layers[0].bottom_up);
    CHECK(bits_equal(z, ref));
}

TEST_CASE("BLT at step 0 equals B with the same bottom-up weights") {
    auto w = random_weights(4, 6, 3, 2);
    auto blt = make_stack(w, WiringMode::BLT);
    auto b = make_stack(w, WiringMode::B);
    auto x = random_tensor({2, 1, 9, 9}, 101);
    auto blt_logits = unroll(nullptr, blt, x, 4, false);
    auto b_logits = unroll(nullptr, b, x, 1, false);
    REQUIRE(blt_logits.size() == 4);
    CHECK(bits_equal(blt_logits[0], b_logits[0]));
}

TEST_CASE("tau-0 equivalence holds for every recurrent mode") {
    auto w = random_weights(3, 4, 5, 3);
    auto x = random_tensor({1, 1, 8, 8}, 102);
    auto base = unroll(nullptr, make_stack(w, WiringMode::B), x, 1, false)[0];
    for (WiringMode m : {WiringMode::BL, WiringMode::BT, WiringMode::BLT}) {
        auto logits = unroll(nullptr, make_stack(w, m), x, 3, false);
        CHECK(bits_equal(logits[0], base));
    }
}

TEST_CASE("all-zero kernels leave only the bias in the pre-activation") {
    auto w = random_weights(3, 4, 2, 4);
    auto stack = make_stack(w, WiringMode::BLT);
    std::fill(w.kb1.data().begin(), w.kb1.data().end(), 0.0);
    std::fill(w.kl1.data().begin(), w.kl1.data().end(), 0.0);
    std::fill(w.kt1.data().begin(), w.kt1.data().end(), 0.0);
    auto x = random_tensor({1, 1, 6, 6}, 103);
    auto h_prev = random_tensor({1, 3, 6, 6}, 104);
    auto h_above = random_tensor({1, 4, 6, 6}, 105);
    Tensor z = preactivation(nullptr, stack.layers[0], x, &h_prev, &h_above, WiringMode::BLT);
    auto zd = z.data();
    for (i64 c = 0; c < 3; ++c)
        for (i64 i = 0; i < 36; ++i)
            CHECK(zd[static_cast<size_t>(c * 36 + i)] == w.b1.data()[static_cast<size_t>(c)]);
}

TEST_CASE("preactivation: missing kernel for the requested mode is a configuration error") {
    auto w = random_weights(3, 4, 2, 5);
    auto stack = make_stack(w, WiringMode::B);  // no lateral allocated
    auto x = random_tensor({1, 1, 6, 6}, 106);
    auto h_prev = random_tensor({1, 3, 6, 6}, 107);
    CHECK_THROWS_WITH_AS(
        preactivation(nullptr, stack.layers[0], x, &h_prev, nullptr, WiringMode::BL),
        doctest::Contains("none was allocated"), ValueError);
}

TEST_CASE("ea_accumulate: identity at step 0, induction, prefix-sum oracle") {
    auto z0 = random_tensor({1, 2, 4, 4}, 108);
    Tensor acc = ea_accumulate(nullptr, z0, nullptr);
    CHECK(acc.same_storage(z0));  // identity on z_now

    Tensor c = Tensor::full({2, 3}, 1.5);
    Tensor a = ea_accumulate(nullptr, c, nullptr);
    for (int t = 1; t < 4; ++t) a = ea_accumulate(nullptr, c, &a);
    for (double v : a.data()) CHECK(v == doctest::Approx(6.0).epsilon(1e-15));

    // seeded random sequence against an independently computed prefix sum
    std::vector<Tensor> zs;
    for (int t = 0; t < 6; ++t) zs.push_back(random_tensor({3, 5}, rng::split(109, static_cast<u64>(t))));
    Tensor run;
    std::vector<double> prefix(15, 0.0);
    for (int t = 0; t < 6; ++t) {
        run = ea_accumulate(nullptr, zs[static_cast<size_t>(t)], t > 0 ? &run : nullptr);
        for (size_t i = 0; i < 15; ++i) prefix[i] += zs[static_cast<size_t>(t)].data()[i];
        for (size_t i = 0; i < 15; ++i)
            CHECK(run.data()[i] == doctest::Approx(prefix[i]).epsilon(1e-12));
    }

    Tensor wrong = Tensor::zeros({2, 2});
    CHECK_THROWS_AS(ea_accumulate(nullptr, z0, &wrong), ValueError);
}

TEST_CASE("unroll of mode B equals a hand-built plain feed-forward CNN") {
    auto w = random_weights(3, 5, 4, 6);
    auto stack = make_stack(w, WiringMode::B);
    auto x = random_tensor({2, 1, 8, 8}, 110);
    auto logits = unroll(nullptr, stack, x, 1, false);
    REQUIRE(logits.size() == 1);

    Tensor h1 = relu(nullptr, conv2d(nullptr, x, stack.layers[0].bottom_up));
    Tensor h2 = relu(nullptr, conv2d(nullptr, h1, stack.layers[1].bottom_up));
    Tensor ref = global_avg_pool(nullptr, conv2d(nullptr, h2, stack.out_conv));
    CHECK(bits_equal(logits[0], ref));
}

TEST_CASE("BL with zeroed lateral kernels repeats the same logits at every step") {
    auto w = random_weights(3, 4, 2, 7);
    std::fill(w.kl1.data().begin(), w.kl1.data().end(), 0.0);
    std::fill(w.kl2.data().begin(), w.kl2.data().end(), 0.0);
    auto stack = make_stack(w, WiringMode::BL);
    auto x = random_tensor({1, 1, 8, 8}, 111);
    auto logits = unroll(nullptr, stack, x, 4, false);
    for (int t = 1; t < 4; ++t) CHECK(bits_equal(logits[static_cast<size_t>(t)], logits[0]));
}

TEST_CASE("BLT logits match an explicitly unrolled four-copy feed-forward oracle") {
    auto w = random_weights(3, 4, 5, 8);
    auto stack = make_stack(w, WiringMode::BLT);
    auto x = random_tensor({1, 1, 8, 8}, 112);
    auto logits = unroll(nullptr, stack, x, 4, false);

    // oracle: compose per-step graphs from plain ops on the same weights
    ConvParams lat1 = zero_bias_params(w.kl1, 3);
    ConvParams lat2 = zero_bias_params(w.kl2, 4);
    ConvParams td1;
    td1.kernel = w.kt1;
    td1.bias = Tensor::zeros({3});
    Tensor h1, h2;
    Tensor last;
    for (int t = 0; t < 4; ++t) {
        Tensor z1 = conv2d(nullptr, x, stack.layers[0].bottom_up);
        if (t > 0) {
            z1 = add(nullptr, z1, conv2d(nullptr, h1, lat1));
            z1 = add(nullptr, z1, conv2d_transpose(nullptr, h2, td1));
        }
        Tensor h1n = relu(nullptr, z1);
        Tensor z2 = conv2d(nullptr, h1n, stack.layers[1].bottom_up);
        if (t > 0) z2 = add(nullptr, z2, conv2d(nullptr, h2, lat2));
        Tensor h2n = relu(nullptr, z2);
        last = global_avg_pool(nullptr, conv2d(nullptr, h2n, stack.out_conv));
        h1 = h1n;
        h2 = h2n;
    }
    CHECK(max_abs_diff(logits[3], last) <= 1e-10);
}

TEST_CASE("readout: zero activations give the bias, single-logit readout is scalar") {
    auto w = random_weights(3, 4, 1, 9);
    Tensor h = Tensor::zeros({2, 4, 8, 8});
    ConvParams ro;
    ro.kernel = w.kro;
    ro.bias = w.bro;
    Tensor logits = readout(nullptr, h, ro);
    REQUIRE(logits.shape() == Shape{2, 1});
    CHECK(logits.data()[0] == doctest::Approx(w.bro.data()[0]).epsilon(1e-15));
    CHECK(logits.data()[1] == doctest::Approx(w.bro.data()[0]).epsilon(1e-15));
}

TEST_CASE("readout of a constant map matches the direct-summation oracle at 8x8") {
    const i64 c = 4, n_out = 2, hw = 8;
    const double v = 0.75;
    Tensor h = Tensor::full({1, c, hw, hw}, v);
    ConvParams ro;
    ro.kernel = Tensor::full({n_out, c, 3, 3}, 1.0);
    ro.bias = Tensor::from_data({n_out}, {0.25, -1.0});
    Tensor logits = readout(nullptr, h, ro);

    // direct summation: each conv output pixel is (taps in range)*C*v + bias
    double total = 0.0;
    for (i64 y = 0; y < hw; ++y)
        for (i64 x = 0; x < hw; ++x) {
            int taps = 0;
            for (i64 u = -1; u <= 1; ++u)
                for (i64 vv = -1; vv <= 1; ++vv)
                    if (y + u >= 0 && y + u < hw && x + vv >= 0 && x + vv < hw) ++taps;
            total += static_cast<double>(taps) * static_cast<double>(c) * v;
        }
    const double expected_no_bias = total / static_cast<double>(hw * hw);
    CHECK(logits.data()[0] == doctest::Approx(expected_no_bias + 0.25).epsilon(1e-12));
    CHECK(logits.data()[1] == doctest::Approx(expected_no_bias - 1.0).epsilon(1e-12));

    // at interior-dominated sizes the value approaches C*9*v + bias
    Tensor big = Tensor::full({1, c, 64, 64}, v);
    Tensor big_logits = readout(nullptr, big, ro);
    CHECK(std::abs(big_logits.data()[0] - (9.0 * 4 * v + 0.25)) / (9.0 * 4 * v) < 0.05);
}

TEST_CASE("EA linearity: readout of the accumulator equals the sum of per-step readouts") {
    auto w = random_weights(2, 3, 4, 10);
    ConvParams ro = zero_bias_params(w.kro, 4);  // linear readout, no bias term
    ro.kernel = random_tensor({4, 3, 3, 3}, 113);
    std::vector<Tensor> zs;
    for (int t = 0; t < 5; ++t) zs.push_back(random_tensor({2, 3, 6, 6}, rng::split(114, static_cast<u64>(t))));
    Tensor accum;
    Tensor sum_readouts;
    for (int t = 0; t < 5; ++t) {
        accum = ea_accumulate(nullptr, zs[static_cast<size_t>(t)], t > 0 ? &accum : nullptr);
        Tensor r = readout(nullptr, zs[static_cast<size_t>(t)], ro);
        sum_readouts = t == 0 ? r : add(nullptr, sum_readouts, r);
        CHECK(max_abs_diff(readout(nullptr, accum, ro), sum_readouts) <= 1e-10);
    }
}

TEST_CASE("EA-enabled unroll accumulates pre-activations before the readout") {
    auto w = random_weights(2, 3, 2, 11);
    auto stack = make_stack(w, WiringMode::BL);
    auto x = random_tensor({1, 1, 6, 6}, 115);
    auto plain = unroll(nullptr, stack, x, 3, false);
    auto ea = unroll(nullptr, stack, x, 3, true);
    CHECK(bits_equal(plain[0], ea[0]));  // single step accumulated == raw
    CHECK(!bits_equal(plain[2], ea[2]));

    // recompute the EA logits by accumulating the final-layer z by hand
    ConvParams lat1 = zero_bias_params(w.kl1, 2);
    ConvParams lat2 = zero_bias_params(w.kl2, 3);
    Tensor h1, h2, accum;
    for (int t = 0; t < 3; ++t) {
        Tensor z1 = conv2d(nullptr, x, stack.layers[0].bottom_up);
        if (t > 0) z1 = add(nullptr, z1, conv2d(nullptr, h1, lat1));
        Tensor h1n = relu(nullptr, z1);
        Tensor z2 = conv2d(nullptr, h1n, stack.layers[1].bottom_up);
        if (t > 0) z2 = add(nullptr, z2, conv2d(nullptr, h2, lat2));
        accum = t == 0 ? z2 : add(nullptr, accum, z2);
        h1 = h1n;
        h2 = relu(nullptr, z2);  // recurrence sees the raw step activation
    }
    Tensor ref = readout(nullptr, relu(nullptr, accum), stack.out_conv);
    CHECK(max_abs_diff(ea[2], ref) <= 1e-10);
}

TEST_CASE("perturbing a lateral kernel changes logits only from step 1 onward") {
    auto w = random_weights(3, 4, 2, 12);
    auto stack = make_stack(w, WiringMode::BL);
    auto x = random_tensor({1, 1, 8, 8}, 116);
    auto before = unroll(nullptr, stack, x, 4, false);
    w.kl2.data()[7] += 0.25;
    auto after = unroll(nullptr, stack, x, 4, false);
    CHECK(bits_equal(before[0], after[0]));
    for (int t = 1; t < 4; ++t) CHECK(!bits_equal(before[static_cast<size_t>(t)], after[static_cast<size_t>(t)]));
}

TEST_CASE("gradients flow through the full BLT unroll, including top-down paths") {
    auto w = random_weights(2, 3, 2, 13);
    auto stack = make_stack(w, WiringMode::BLT);
    auto x = random_tensor({1, 1, 8, 8}, 117, -1, 1, true);
    Tensor y = Tensor::zeros({1, 2});
    y.data()[0] = 1.0;
    auto f = [&](Tape* tape) {
        auto logits = unroll(tape, stack, x, 4, true);
        return bce_loss(tape, y, sigmoid(tape, logits.back()));
    };
    for (Tensor t : {x, w.kl1, w.kt1, w.kb2, w.b1, w.kro}) {
        auto report = grad_check(f, t, 1e-5);
        CHECK(report.finite);
        CHECK(report.max_rel_err <= 1e-4);
    }
}

TEST_CASE("unroll rejects nonpositive step counts") {
    auto w = random_weights(2, 3, 2, 14);
    auto stack = make_stack(w, WiringMode::BL);
    auto x = random_tensor({1, 1, 6, 6}, 118);
    CHECK_THROWS_AS(unroll(nullptr, stack, x, 0, false), ValueError);
}
