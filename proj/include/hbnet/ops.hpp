#pragma once

#include <optional>
#include <vector>

#include "hbnet/tape.hpp"
#include "hbnet/tensor.hpp"

namespace hbnet {

struct Padding {
    static Padding same() { return Padding{true, 0}; }
    static Padding explicit_px(i64 px) { return Padding{false, px}; }

    i64 resolve(i64 k) const { return is_same ? (k - 1) / 2 : px; }

    bool is_same = true;
    i64 px = 0;
};

/// Convolution parameters. For conv2d the kernel is laid out
/// [Cout, Cin, k, k]; for conv2d_transpose the same buffer is read with the
/// channel axes swapped, i.e. [Cin, Cout, k, k].
struct ConvParams {
    Tensor kernel;
    Tensor bias;
    i64 stride = 1;
    Padding padding = Padding::same();
};

// All ops run forward immediately; when `tape` is non-null they also record
// a node for backward. Passing nullptr gives a pure forward evaluation.

/// Cross-correlation plus broadcast bias. [B,Ci,H,W] -> [B,Co,H',W'].
Tensor conv2d(Tape* tape, const Tensor& input, const ConvParams& p);

/// Exact linear adjoint of conv2d with the same kernel (channel axes
/// swapped); bias added after scattering. Stride 1 only.
Tensor conv2d_transpose(Tape* tape, const Tensor& input, const ConvParams& p);

Tensor relu(Tape* tape, const Tensor& x);

/// [B,C,H,W] -> [B,C], mean over the spatial axes.
Tensor global_avg_pool(Tape* tape, const Tensor& x);

Tensor sigmoid(Tape* tape, const Tensor& x);

/// Mean binary cross-entropy over all cells; yhat clamped to
/// [1e-12, 1 - 1e-12] inside the logs. y must be 0/1-valued.
Tensor bce_loss(Tape* tape, const Tensor& y, const Tensor& yhat);

Tensor add(Tape* tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape* tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape* tape, const Tensor& x, double c);
Tensor sum_all(Tape* tape, const Tensor& x);

/// Concatenate [B,w_i] tensors along axis 1.
Tensor concat_cols(Tape* tape, const std::vector<Tensor>& parts);

/// Max-subtracted softmax over a plain vector (diagnostic scores; no tape).
std::vector<double> softmax(const std::vector<double>& x);

inline constexpr double kBceEps = 1e-12;

}  // namespace hbnet
