#include "hbnet/ops.hpp"

#include <algorithm>
#include <cmath>

#include "hbnet/kernels.hpp"
#include "hbnet/parallel.hpp"

namespace hbnet {

void Tape::backward(const Tensor& loss) {
    check(loss.defined() && loss.numel() == 1,
          "backward: loss must be a scalar tensor" +
              (loss.defined() ? std::string(", got shape ") + shape_str(loss.shape()) : std::string()));
    check(loss.impl()->tape_output, "backward: loss was not produced through taped operations");
    for (auto& node : nodes_) {
        auto g = detail::grad_of(node->output);
        std::fill(g.begin(), g.end(), 0.0);
    }
    detail::grad_of(loss.impl())[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)->backward();
}

namespace {

using kernels::Corr2dGeom;

void check_conv_args(const char* op, const Tensor& input, const ConvParams& p, bool transpose) {
    check(input.defined() && input.rank() == 4,
          std::string(op) + ": input must be [B,C,H,W], got " +
              (input.defined() ? shape_str(input.shape()) : "undefined"));
    check(p.kernel.defined() && p.kernel.rank() == 4,
          std::string(op) + ": kernel must be rank 4, got " +
              (p.kernel.defined() ? shape_str(p.kernel.shape()) : "undefined"));
    const i64 k_h = p.kernel.dim(2), k_w = p.kernel.dim(3);
    check(k_h == k_w, std::string(op) + ": kernel must be square, got " + shape_str(p.kernel.shape()));
    check(k_h % 2 == 1, std::string(op) + ": kernel size must be odd, got " + std::to_string(k_h));
    const i64 cin_axis = transpose ? 0 : 1;
    check(input.dim(1) == p.kernel.dim(static_cast<size_t>(cin_axis)),
          std::string(op) + ": input channel axis 1 = " + std::to_string(input.dim(1)) +
              " does not match kernel in-channel axis " + std::to_string(cin_axis) + " = " +
              std::to_string(p.kernel.dim(static_cast<size_t>(cin_axis))));
    const i64 cout = p.kernel.dim(transpose ? 1 : 0);
    check(p.bias.defined() && p.bias.rank() == 1 && p.bias.dim(0) == cout,
          std::string(op) + ": bias must have length " + std::to_string(cout) + ", got " +
              (p.bias.defined() ? shape_str(p.bias.shape()) : "undefined"));
    check(p.stride >= 1, std::string(op) + ": stride must be >= 1");
    const i64 pad = p.padding.resolve(k_h);
    check(pad >= 0 && pad <= k_h - 1,
          std::string(op) + ": padding must be in [0, k-1], got " + std::to_string(pad));
}

/// ker2[b][a][u][v] = ker[a][b][k-1-u][k-1-v]
std::vector<double> flip_transpose(std::span<const double> ker, i64 ca, i64 cb, i64 k) {
    std::vector<double> out(static_cast<size_t>(ca * cb * k * k));
    for (i64 a = 0; a < ca; ++a)
        for (i64 b = 0; b < cb; ++b)
            for (i64 u = 0; u < k; ++u)
                for (i64 v = 0; v < k; ++v)
                    out[static_cast<size_t>(((b * ca + a) * k + u) * k + v)] =
                        ker[static_cast<size_t>(((a * cb + b) * k + (k - 1 - u)) * k + (k - 1 - v))];
    return out;
}

struct Conv2dNode final : Tape::Node {
    std::shared_ptr<Tensor::Impl> input, kernel, bias;
    Corr2dGeom g;

    void backward() override {
        auto dout = detail::grad_of(output);
        if (detail::wants_grad(input)) {
            auto flipped = flip_transpose(kernel->data, g.cout, g.cin, g.k);
            Corr2dGeom back{g.batch, g.cout, g.hout, g.wout, g.cin, g.hin, g.win, g.k, g.k - 1 - g.pad};
            kernels::active().corr2d(detail::grad_of(input).data(), dout.data(), flipped.data(),
                                     nullptr, true, back);
        }
        if (detail::wants_grad(kernel))
            kernels::active().corr2d_kgrad(detail::grad_of(kernel).data(), dout.data(),
                                           input->data.data(), g);
        if (detail::wants_grad(bias))
            kernels::bias_grad(detail::grad_of(bias).data(), dout.data(), g.batch, g.cout,
                               g.hout * g.wout);
    }
};

struct Conv2dStridedNode final : Tape::Node {
    std::shared_ptr<Tensor::Impl> input, kernel, bias;
    Corr2dGeom g;
    i64 stride = 1;

    void backward() override {
        auto dout = detail::grad_of(output);
        if (detail::wants_grad(input))
            kernels::corr2d_strided_dinput(detail::grad_of(input).data(), dout.data(),
                                           kernel->data.data(), g, stride);
        if (detail::wants_grad(kernel))
            kernels::corr2d_strided_dkernel(detail::grad_of(kernel).data(), dout.data(),
                                            input->data.data(), g, stride);
        if (detail::wants_grad(bias))
            kernels::bias_grad(detail::grad_of(bias).data(), dout.data(), g.batch, g.cout,
                               g.hout * g.wout);
    }
};

struct ConvTransposeNode final : Tape::Node {
    std::shared_ptr<Tensor::Impl> input, kernel, bias;
    // Geometry of the forward scatter: cin/hin/win describe the op input,
    // cout/hout/wout the op output, pad is the conv2d-view padding.
    Corr2dGeom g;

    void backward() override {
        auto dout = detail::grad_of(output);
        if (detail::wants_grad(input)) {
            // dIn = plain correlation of dOut with the kernel read as
            // [Cin, Cout, k, k], padding as given.
            Corr2dGeom back{g.batch, g.cout, g.hout, g.wout, g.cin, g.hin, g.win, g.k, g.pad};
            kernels::active().corr2d(detail::grad_of(input).data(), dout.data(),
                                     kernel->data.data(), nullptr, true, back);
        }
        if (detail::wants_grad(kernel)) {
            // M[co,ci,u,v] via kgrad at flipped padding, then scatter back
            // flipped and channel-swapped.
            const i64 k = g.k;
            Corr2dGeom mg{g.batch, g.cin, g.hin, g.win, g.cout, g.hout, g.wout, k, k - 1 - g.pad};
            std::vector<double> m(static_cast<size_t>(g.cout * g.cin * k * k), 0.0);
            kernels::active().corr2d_kgrad(m.data(), dout.data(), input->data.data(), mg);
            auto dker = detail::grad_of(kernel);
            for (i64 ci = 0; ci < g.cin; ++ci)
                for (i64 co = 0; co < g.cout; ++co)
                    for (i64 u = 0; u < k; ++u)
                        for (i64 v = 0; v < k; ++v)
                            dker[static_cast<size_t>(((ci * g.cout + co) * k + u) * k + v)] +=
                                m[static_cast<size_t>(
                                    ((co * g.cin + ci) * k + (k - 1 - u)) * k + (k - 1 - v))];
        }
        if (detail::wants_grad(bias))
            kernels::bias_grad(detail::grad_of(bias).data(), dout.data(), g.batch, g.cout,
                               g.hout * g.wout);
    }
};

struct ReluNode final : Tape::Node {
    std::shared_ptr<Tensor::Impl> input;

    void backward() override {
        if (!detail::wants_grad(input)) return;
        auto dout = detail::grad_of(output);
        kernels::active().relu_bwd(detail::grad_of(input).data(), dout.data(), input->data.data(),
                                   static_cast<i64>(input->data.size()));
    }
};

struct GapNode final : Tape::Node {
    std::shared_ptr<Tensor::Impl> input;
    i64 hw = 1;

    void backward() override {
        if (!detail::wants_grad(input)) return;
        auto dout = detail::grad_of(output);
        auto din = detail::grad_of(input);
        const double inv = 1.0 / static_cast<double>(hw);
        parallel_for(static_cast<i64>(dout.size()), [&](i64 lo, i64 hi) {
            for (i64 bc = lo; bc < hi; ++bc) {
                const double g = dout[static_cast<size_t>(bc)] * inv;
                double* slice = din.data() + bc * hw;
                for (i64 i = 0; i < hw; ++i) slice[i] += g;
            }
        });
    }
};

struct SigmoidNode final : Tape::Node {
    std::shared_ptr<Tensor::Impl> input;

    void backward() override {
        if (!detail::wants_grad(input)) return;
        auto dout = detail::grad_of(output);
        auto din = detail::grad_of(input);
        const auto& s = output->data;
        for (size_t i = 0; i < s.size(); ++i) din[i] += dout[i] * s[i] * (1.0 - s[i]);
    }
};

struct BceNode final : Tape::Node {
    std::shared_ptr<Tensor::Impl> target, pred;

    void backward() override {
        if (!detail::wants_grad(pred)) return;
        const double dl = detail::grad_of(output)[0];
        auto dp = detail::grad_of(pred);
        const double n = static_cast<double>(pred->data.size());
        for (size_t i = 0; i < pred->data.size(); ++i) {
            const double yh = pred->data[i];
            if (yh <= kBceEps || yh >= 1.0 - kBceEps) continue;  // clamped: flat
            const double y = target->data[i];
            dp[i] += dl * (-(y / yh) + (1.0 - y) / (1.0 - yh)) / n;
        }
    }
};

struct AddNode final : Tape::Node {
    std::shared_ptr<Tensor::Impl> a, b;

    void backward() override {
        auto dout = detail::grad_of(output);
        const i64 n = static_cast<i64>(dout.size());
        if (detail::wants_grad(a)) kernels::active().axpy(detail::grad_of(a).data(), 1.0, dout.data(), n);
        if (detail::wants_grad(b)) kernels::active().axpy(detail::grad_of(b).data(), 1.0, dout.data(), n);
    }
};

struct MulNode final : Tape::Node {
    std::shared_ptr<Tensor::Impl> a, b;

    void backward() override {
        auto dout = detail::grad_of(output);
        const i64 n = static_cast<i64>(dout.size());
        if (detail::wants_grad(a))
            kernels::active().mul_acc(detail::grad_of(a).data(), dout.data(), b->data.data(), n);
        if (detail::wants_grad(b))
            kernels::active().mul_acc(detail::grad_of(b).data(), dout.data(), a->data.data(), n);
    }
};

struct ScaleNode final : Tape::Node {
    std::shared_ptr<Tensor::Impl> input;
    double c = 1.0;

    void backward() override {
        if (!detail::wants_grad(input)) return;
        auto dout = detail::grad_of(output);
        kernels::active().axpy(detail::grad_of(input).data(), c, dout.data(),
                               static_cast<i64>(dout.size()));
    }
};

struct SumNode final : Tape::Node {
    std::shared_ptr<Tensor::Impl> input;

    void backward() override {
        if (!detail::wants_grad(input)) return;
        const double g = detail::grad_of(output)[0];
        auto din = detail::grad_of(input);
        for (double& d : din) d += g;
    }
};

struct ConcatColsNode final : Tape::Node {
    std::vector<std::shared_ptr<Tensor::Impl>> parts;
    std::vector<i64> widths;
    i64 batch = 0, total = 0;

    void backward() override {
        auto dout = detail::grad_of(output);
        i64 offset = 0;
        for (size_t p = 0; p < parts.size(); ++p) {
            const i64 w = widths[p];
            if (detail::wants_grad(parts[p])) {
                auto dp = detail::grad_of(parts[p]);
                for (i64 b = 0; b < batch; ++b)
                    for (i64 j = 0; j < w; ++j)
                        dp[static_cast<size_t>(b * w + j)] += dout[static_cast<size_t>(b * total + offset + j)];
            }
            offset += w;
        }
    }
};

}  // namespace

Tensor conv2d(Tape* tape, const Tensor& input, const ConvParams& p) {
    check_conv_args("conv2d", input, p, false);
    const i64 k = p.kernel.dim(2);
    const i64 pad = p.padding.resolve(k);
    const i64 hout = (input.dim(2) + 2 * pad - k) / p.stride + 1;
    const i64 wout = (input.dim(3) + 2 * pad - k) / p.stride + 1;
    check(hout >= 1 && wout >= 1, "conv2d: output would be empty for input " + shape_str(input.shape()));
    Corr2dGeom g{input.dim(0), input.dim(1), input.dim(2), input.dim(3),
                 p.kernel.dim(0), hout,       wout,         k,
                 pad};
    Tensor out = Tensor::zeros({g.batch, g.cout, hout, wout});
    if (p.stride == 1) {
        kernels::active().corr2d(out.data().data(), input.data().data(), p.kernel.data().data(),
                                 p.bias.data().data(), false, g);
        if (tape != nullptr) {
            auto node = std::make_unique<Conv2dNode>();
            node->input = input.impl();
            node->kernel = p.kernel.impl();
            node->bias = p.bias.impl();
            node->g = g;
            node->output = out.impl();
            tape->record(std::move(node));
        }
    } else {
        kernels::corr2d_strided(out.data().data(), input.data().data(), p.kernel.data().data(),
                                p.bias.data().data(), g, p.stride);
        if (tape != nullptr) {
            auto node = std::make_unique<Conv2dStridedNode>();
            node->input = input.impl();
            node->kernel = p.kernel.impl();
            node->bias = p.bias.impl();
            node->g = g;
            node->stride = p.stride;
            node->output = out.impl();
            tape->record(std::move(node));
        }
    }
    return out;
}

Tensor conv2d_transpose(Tape* tape, const Tensor& input, const ConvParams& p) {
    check_conv_args("conv2d_transpose", input, p, true);
    check(p.stride == 1, "conv2d_transpose: only stride 1 is supported");
    const i64 k = p.kernel.dim(2);
    const i64 pad = p.padding.resolve(k);
    const i64 cout = p.kernel.dim(1);
    const i64 hout = input.dim(2) + k - 1 - 2 * pad;
    const i64 wout = input.dim(3) + k - 1 - 2 * pad;
    check(hout >= 1 && wout >= 1,
          "conv2d_transpose: output would be empty for input " + shape_str(input.shape()));
    Corr2dGeom g{input.dim(0), input.dim(1), input.dim(2), input.dim(3), cout, hout, wout, k, pad};
    Tensor out = Tensor::zeros({g.batch, cout, hout, wout});
    // Forward scatter computed as a gather: correlate with the kernel
    // flipped in space and swapped in channels, at complementary padding.
    auto flipped = flip_transpose(p.kernel.data(), g.cin, cout, k);
    Corr2dGeom fwd{g.batch, g.cin, g.hin, g.win, cout, hout, wout, k, k - 1 - pad};
    kernels::active().corr2d(out.data().data(), input.data().data(), flipped.data(),
                             p.bias.data().data(), false, fwd);
    if (tape != nullptr) {
        auto node = std::make_unique<ConvTransposeNode>();
        node->input = input.impl();
        node->kernel = p.kernel.impl();
        node->bias = p.bias.impl();
        node->g = g;
        node->output = out.impl();
        tape->record(std::move(node));
    }
    return out;
}

Tensor relu(Tape* tape, const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape());
    kernels::active().relu_fwd(out.data().data(), x.data().data(), x.numel());
    if (tape != nullptr) {
        auto node = std::make_unique<ReluNode>();
        node->input = x.impl();
        node->output = out.impl();
        tape->record(std::move(node));
    }
    return out;
}

Tensor global_avg_pool(Tape* tape, const Tensor& x) {
    check(x.rank() == 4, "global_avg_pool: input must be [B,C,H,W], got " + shape_str(x.shape()));
    const i64 hw = x.dim(2) * x.dim(3);
    check(hw >= 1, "global_avg_pool: empty spatial extent");
    Tensor out = Tensor::zeros({x.dim(0), x.dim(1)});
    auto od = out.data();
    auto xd = x.data();
    const double inv = 1.0 / static_cast<double>(hw);
    parallel_for(out.numel(), [&](i64 lo, i64 hi) {
        for (i64 bc = lo; bc < hi; ++bc) {
            const double* slice = xd.data() + bc * hw;
            double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            i64 i = 0;
            for (; i + 4 <= hw; i += 4) {
                s0 += slice[i];
                s1 += slice[i + 1];
                s2 += slice[i + 2];
                s3 += slice[i + 3];
            }
            double tail[4] = {0.0, 0.0, 0.0, 0.0};
            for (; i < hw; ++i) tail[i % 4] += slice[i];
            od[static_cast<size_t>(bc)] =
                (((s0 + tail[0]) + (s1 + tail[1])) + ((s2 + tail[2]) + (s3 + tail[3]))) * inv;
        }
    });
    if (tape != nullptr) {
        auto node = std::make_unique<GapNode>();
        node->input = x.impl();
        node->hw = hw;
        node->output = out.impl();
        tape->record(std::move(node));
    }
    return out;
}

Tensor sigmoid(Tape* tape, const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape());
    auto od = out.data();
    auto xd = x.data();
    for (i64 i = 0; i < x.numel(); ++i) {
        const double v = xd[static_cast<size_t>(i)];
        if (v >= 0.0) {
            od[static_cast<size_t>(i)] = 1.0 / (1.0 + std::exp(-v));
        } else {
            const double e = std::exp(v);
            od[static_cast<size_t>(i)] = e / (1.0 + e);
        }
    }
    if (tape != nullptr) {
        auto node = std::make_unique<SigmoidNode>();
        node->input = x.impl();
        node->output = out.impl();
        tape->record(std::move(node));
    }
    return out;
}

Tensor bce_loss(Tape* tape, const Tensor& y, const Tensor& yhat) {
    check(y.defined() && yhat.defined() && y.shape() == yhat.shape(),
          "bce_loss: shape mismatch between targets " + (y.defined() ? shape_str(y.shape()) : "?") +
              " and predictions " + (yhat.defined() ? shape_str(yhat.shape()) : "?"));
    check(y.numel() >= 1, "bce_loss: empty input");
    auto yd = y.data();
    auto pd = yhat.data();
    double acc = 0.0;
    for (i64 i = 0; i < y.numel(); ++i) {
        const double t = yd[static_cast<size_t>(i)];
        check(t == 0.0 || t == 1.0, "bce_loss: target " + std::to_string(i) + " is not binary");
        const double p = std::clamp(pd[static_cast<size_t>(i)], kBceEps, 1.0 - kBceEps);
        acc += t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    }
    Tensor out = Tensor::from_data({1}, {-acc / static_cast<double>(y.numel())});
    if (tape != nullptr) {
        auto node = std::make_unique<BceNode>();
        node->target = y.impl();
        node->pred = yhat.impl();
        node->output = out.impl();
        tape->record(std::move(node));
    }
    return out;
}

Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
    check(a.shape() == b.shape(), "add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    Tensor out = Tensor::zeros(a.shape());
    kernels::active().add(out.data().data(), a.data().data(), b.data().data(), out.numel());
    if (tape != nullptr) {
        auto node = std::make_unique<AddNode>();
        node->a = a.impl();
        node->b = b.impl();
        node->output = out.impl();
        tape->record(std::move(node));
    }
    return out;
}

Tensor mul(Tape* tape, const Tensor& a, const Tensor& b) {
    check(a.shape() == b.shape(), "mul: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    Tensor out = Tensor::zeros(a.shape());
    auto od = out.data();
    auto ad = a.data();
    auto bd = b.data();
    for (i64 i = 0; i < out.numel(); ++i) od[static_cast<size_t>(i)] = ad[static_cast<size_t>(i)] * bd[static_cast<size_t>(i)];
    if (tape != nullptr) {
        auto node = std::make_unique<MulNode>();
        node->a = a.impl();
        node->b = b.impl();
        node->output = out.impl();
        tape->record(std::move(node));
    }
    return out;
}

Tensor scale(Tape* tape, const Tensor& x, double c) {
    Tensor out = Tensor::zeros(x.shape());
    auto od = out.data();
    auto xd = x.data();
    for (i64 i = 0; i < x.numel(); ++i) od[static_cast<size_t>(i)] = c * xd[static_cast<size_t>(i)];
    if (tape != nullptr) {
        auto node = std::make_unique<ScaleNode>();
        node->input = x.impl();
        node->c = c;
        node->output = out.impl();
        tape->record(std::move(node));
    }
    return out;
}

Tensor sum_all(Tape* tape, const Tensor& x) {
    double acc = 0.0;
    for (double v : x.data()) acc += v;
    Tensor out = Tensor::from_data({1}, {acc});
    if (tape != nullptr) {
        auto node = std::make_unique<SumNode>();
        node->input = x.impl();
        node->output = out.impl();
        tape->record(std::move(node));
    }
    return out;
}

Tensor concat_cols(Tape* tape, const std::vector<Tensor>& parts) {
    check(!parts.empty(), "concat_cols: no parts");
    const i64 batch = parts[0].dim(0);
    i64 total = 0;
    for (const auto& p : parts) {
        check(p.rank() == 2 && p.dim(0) == batch,
              "concat_cols: expected [B,w] with B=" + std::to_string(batch) + ", got " + shape_str(p.shape()));
        total += p.dim(1);
    }
    Tensor out = Tensor::zeros({batch, total});
    auto od = out.data();
    i64 offset = 0;
    for (const auto& p : parts) {
        const i64 w = p.dim(1);
        auto pd = p.data();
        for (i64 b = 0; b < batch; ++b)
            for (i64 j = 0; j < w; ++j) od[static_cast<size_t>(b * total + offset + j)] = pd[static_cast<size_t>(b * w + j)];
        offset += w;
    }
    if (tape != nullptr) {
        auto node = std::make_unique<ConcatColsNode>();
        for (const auto& p : parts) {
            node->parts.push_back(p.impl());
            node->widths.push_back(p.dim(1));
        }
        node->batch = batch;
        node->total = total;
        node->output = out.impl();
        tape->record(std::move(node));
    }
    return out;
}

std::vector<double> softmax(const std::vector<double>& x) {
    check(!x.empty(), "softmax: empty input");
    const double m = *std::max_element(x.begin(), x.end());
    std::vector<double> out(x.size());
    double denom = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        out[i] = std::exp(x[i] - m);
        denom += out[i];
    }
    for (double& v : out) v /= denom;
    return out;
}

}  // namespace hbnet
