#include "hbnet/rcl.hpp"

#include <algorithm>

#include "hbnet/kernels.hpp"

namespace hbnet {

std::string to_string(WiringMode m) {
    switch (m) {
        case WiringMode::B: return "B";
        case WiringMode::BL: return "BL";
        case WiringMode::BT: return "BT";
        case WiringMode::BLT: return "BLT";
    }
    throw InternalError("bad WiringMode");
}

WiringMode wiring_mode_from_string(const std::string& s) {
    if (s == "B") return WiringMode::B;
    if (s == "BL") return WiringMode::BL;
    if (s == "BT") return WiringMode::BT;
    if (s == "BLT") return WiringMode::BLT;
    fail("unknown wiring mode '" + s + "' (expected B, BL, BT or BLT)");
}

namespace {

using kernels::Corr2dGeom;

/// ker2[b][a][u][v] = ker[a][b][k-1-u][k-1-v]
std::vector<double> flip_swap(std::span<const double> ker, i64 ca, i64 cb, i64 k) {
    std::vector<double> out(static_cast<size_t>(ca * cb * k * k));
    for (i64 a = 0; a < ca; ++a)
        for (i64 b = 0; b < cb; ++b)
            for (i64 u = 0; u < k; ++u)
                for (i64 v = 0; v < k; ++v)
                    out[static_cast<size_t>(((b * ca + a) * k + u) * k + v)] =
                        ker[static_cast<size_t>(((a * cb + b) * k + (k - 1 - u)) * k + (k - 1 - v))];
    return out;
}

Corr2dGeom same_geom(i64 batch, i64 cin, i64 h, i64 w, i64 cout, i64 k) {
    return Corr2dGeom{batch, cin, h, w, cout, h, w, k, (k - 1) / 2};
}

// Fused z = corr(w_b, below) + corr(w_l, self) + corrT(w_t, above) + b.
// Bias comes only from the bottom-up ConvParams.
struct PreactivationNode final : Tape::Node {
    std::shared_ptr<Tensor::Impl> below, kb, bias;
    std::shared_ptr<Tensor::Impl> self_prev, kl;    // null when absent
    std::shared_ptr<Tensor::Impl> above_prev, kt;   // null when absent
    i64 batch = 0, h = 0, w = 0, c = 0, c_below = 0, c_above = 0, k = 3;

    void backward() override {
        auto dout = detail::grad_of(output);
        const auto& kt_table = kernels::active();
        if (detail::wants_grad(below)) {
            auto flipped = flip_swap(kb->data, c, c_below, k);
            kt_table.corr2d(detail::grad_of(below).data(), dout.data(), flipped.data(), nullptr,
                            true, same_geom(batch, c, h, w, c_below, k));
        }
        if (detail::wants_grad(kb))
            kt_table.corr2d_kgrad(detail::grad_of(kb).data(), dout.data(), below->data.data(),
                                  same_geom(batch, c_below, h, w, c, k));
        if (detail::wants_grad(bias))
            kernels::bias_grad(detail::grad_of(bias).data(), dout.data(), batch, c, h * w);
        if (self_prev != nullptr) {
            if (detail::wants_grad(self_prev)) {
                auto flipped = flip_swap(kl->data, c, c, k);
                kt_table.corr2d(detail::grad_of(self_prev).data(), dout.data(), flipped.data(),
                                nullptr, true, same_geom(batch, c, h, w, c, k));
            }
            if (detail::wants_grad(kl))
                kt_table.corr2d_kgrad(detail::grad_of(kl).data(), dout.data(),
                                      self_prev->data.data(), same_geom(batch, c, h, w, c, k));
        }
        if (above_prev != nullptr) {
            if (detail::wants_grad(above_prev)) {
                kt_table.corr2d(detail::grad_of(above_prev).data(), dout.data(), kt->data.data(),
                                nullptr, true, same_geom(batch, c, h, w, c_above, k));
            }
            if (detail::wants_grad(kt)) {
                std::vector<double> m(static_cast<size_t>(c * c_above * k * k), 0.0);
                kt_table.corr2d_kgrad(m.data(), dout.data(), above_prev->data.data(),
                                      same_geom(batch, c_above, h, w, c, k));
                auto dker = detail::grad_of(kt);
                for (i64 a = 0; a < c_above; ++a)
                    for (i64 b = 0; b < c; ++b)
                        for (i64 u = 0; u < k; ++u)
                            for (i64 v = 0; v < k; ++v)
                                dker[static_cast<size_t>(((a * c + b) * k + u) * k + v)] +=
                                    m[static_cast<size_t>(
                                        ((b * c_above + a) * k + (k - 1 - u)) * k + (k - 1 - v))];
            }
        }
    }
};

void check_aligned(const char* what, const Tensor& t, i64 batch, i64 c, i64 h, i64 w) {
    check(t.rank() == 4 && t.dim(0) == batch && t.dim(1) == c && t.dim(2) == h && t.dim(3) == w,
          std::string("preactivation: ") + what + " expected [" + std::to_string(batch) + "," +
              std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w) + "], got " +
              shape_str(t.shape()));
}

}  // namespace

Tensor preactivation(Tape* tape, const RclLayer& layer, const Tensor& h_below,
                     const Tensor* h_self_prev, const Tensor* h_above_prev, WiringMode mode) {
    check(h_below.defined() && h_below.rank() == 4,
          "preactivation: h_below must be [B,C,H,W], got " +
              (h_below.defined() ? shape_str(h_below.shape()) : "undefined"));
    const Tensor& kb = layer.bottom_up.kernel;
    check(kb.defined() && kb.rank() == 4 && kb.dim(2) == kb.dim(3) && kb.dim(2) % 2 == 1,
          "preactivation: bad bottom-up kernel");
    const i64 k = kb.dim(2);
    const i64 c = kb.dim(0);
    const i64 c_below = kb.dim(1);
    const i64 batch = h_below.dim(0), h = h_below.dim(2), w = h_below.dim(3);
    check(h_below.dim(1) == c_below,
          "preactivation: h_below channel axis 1 = " + std::to_string(h_below.dim(1)) +
              " does not match bottom-up kernel in-channel axis 1 = " + std::to_string(c_below));
    check(layer.bottom_up.bias.defined() && layer.bottom_up.bias.numel() == c,
          "preactivation: layer bias must have length " + std::to_string(c));

    const bool want_lateral = mode_has_lateral(mode) && h_self_prev != nullptr;
    const bool want_topdown =
        mode_has_topdown(mode) && h_above_prev != nullptr && layer.index == 1;
    if (want_lateral)
        check(layer.lateral.has_value() && layer.lateral->kernel.defined(),
              "preactivation: mode " + to_string(mode) + " requires a lateral kernel on layer " +
                  std::to_string(layer.index) + " but none was allocated");
    if (want_topdown)
        check(layer.top_down.has_value() && layer.top_down->kernel.defined(),
              "preactivation: mode " + to_string(mode) + " requires a top-down kernel on layer " +
                  std::to_string(layer.index) + " but none was allocated");

    Tensor out = Tensor::zeros({batch, c, h, w});
    const auto& table = kernels::active();
    table.corr2d(out.data().data(), h_below.data().data(), kb.data().data(),
                 layer.bottom_up.bias.data().data(), false, same_geom(batch, c_below, h, w, c, k));

    i64 c_above = 0;
    if (want_lateral) {
        const Tensor& kl = layer.lateral->kernel;
        check(kl.rank() == 4 && kl.dim(0) == c && kl.dim(1) == c && kl.dim(2) == k,
              "preactivation: lateral kernel must be [" + std::to_string(c) + "," +
                  std::to_string(c) + "," + std::to_string(k) + "," + std::to_string(k) + "], got " +
                  shape_str(kl.shape()));
        check_aligned("h_self_prev", *h_self_prev, batch, c, h, w);
        table.corr2d(out.data().data(), h_self_prev->data().data(), kl.data().data(), nullptr, true,
                     same_geom(batch, c, h, w, c, k));
    }
    if (want_topdown) {
        const Tensor& ktd = layer.top_down->kernel;
        check(ktd.rank() == 4 && ktd.dim(1) == c && ktd.dim(2) == k,
              "preactivation: top-down kernel must map the layer above into " + std::to_string(c) +
                  " channels, got " + shape_str(ktd.shape()));
        c_above = ktd.dim(0);
        check_aligned("h_above_prev", *h_above_prev, batch, c_above, h, w);
        auto flipped = flip_swap(ktd.data(), c_above, c, k);
        table.corr2d(out.data().data(), h_above_prev->data().data(), flipped.data(), nullptr, true,
                     same_geom(batch, c_above, h, w, c, k));
    }

    if (tape != nullptr) {
        auto node = std::make_unique<PreactivationNode>();
        node->below = h_below.impl();
        node->kb = kb.impl();
        node->bias = layer.bottom_up.bias.impl();
        if (want_lateral) {
            node->self_prev = h_self_prev->impl();
            node->kl = layer.lateral->kernel.impl();
        }
        if (want_topdown) {
            node->above_prev = h_above_prev->impl();
            node->kt = layer.top_down->kernel.impl();
        }
        node->batch = batch;
        node->h = h;
        node->w = w;
        node->c = c;
        node->c_below = c_below;
        node->c_above = c_above;
        node->k = k;
        node->output = out.impl();
        tape->record(std::move(node));
    }
    return out;
}

Tensor ea_accumulate(Tape* tape, const Tensor& z_now, const Tensor* z_prev_accum) {
    if (z_prev_accum == nullptr || !z_prev_accum->defined()) return z_now;
    check(z_now.shape() == z_prev_accum->shape(),
          "ea_accumulate: shape mismatch " + shape_str(z_now.shape()) + " vs " +
              shape_str(z_prev_accum->shape()));
    return add(tape, z_now, *z_prev_accum);
}

Tensor readout(Tape* tape, const Tensor& h_top, const ConvParams& out_conv) {
    check(out_conv.padding.is_same, "readout: out_conv must use same padding");
    Tensor mapped = conv2d(tape, h_top, out_conv);
    return global_avg_pool(tape, mapped);
}

std::vector<Tensor> unroll(Tape* tape, const LayerStack& stack, const Tensor& input, int steps,
                           bool ea) {
    check(steps >= 1, "unroll: steps must be >= 1, got " + std::to_string(steps));
    check(!stack.layers.empty(), "unroll: empty layer stack");
    const size_t depth = stack.layers.size();
    std::vector<Tensor> prev(depth);
    Tensor accum;
    std::vector<Tensor> logits;
    logits.reserve(static_cast<size_t>(steps));
    for (int tau = 0; tau < steps; ++tau) {
        std::vector<Tensor> cur(depth);
        Tensor below = input;  // the input is replicated at every step
        for (size_t m = 0; m < depth; ++m) {
            const Tensor* self_prev = tau > 0 && prev[m].defined() ? &prev[m] : nullptr;
            const Tensor* above_prev =
                tau > 0 && m + 1 < depth && prev[m + 1].defined() ? &prev[m + 1] : nullptr;
            Tensor z = preactivation(tape, stack.layers[m], below, self_prev, above_prev, stack.mode);
            if (ea && m + 1 == depth) accum = ea_accumulate(tape, z, tau > 0 ? &accum : nullptr);
            cur[m] = relu(tape, z);
            below = cur[m];
        }
        Tensor top = ea ? relu(tape, accum) : cur.back();
        logits.push_back(readout(tape, top, stack.out_conv));
        prev = cur;
    }
    return logits;
}

}  // namespace hbnet
