#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hbnet/ops.hpp"

namespace hbnet {

/// Connection wiring of a recurrent convolutional stack: bottom-up only,
/// plus lateral recurrence, plus top-down recurrence, or both.
enum class WiringMode : u8 { B = 0, BL = 1, BT = 2, BLT = 3 };

inline bool mode_has_lateral(WiringMode m) { return m == WiringMode::BL || m == WiringMode::BLT; }
inline bool mode_has_topdown(WiringMode m) { return m == WiringMode::BT || m == WiringMode::BLT; }

std::string to_string(WiringMode m);
WiringMode wiring_mode_from_string(const std::string& s);

// One recurrent convolutional layer. The layer owns a single bias vector
// (bottom_up.bias); lateral and top-down terms are biasless, so their
// ConvParams carry an undefined bias tensor.
struct RclLayer {
    ConvParams bottom_up;                 // kernel [C, C_below, k, k]
    std::optional<ConvParams> lateral;    // kernel [C, C, k, k]
    std::optional<ConvParams> top_down;   // kernel [C_above, C, k, k]; layer 1 only
    int index = 1;                        // m, 1-based
};

/// z = conv(w_b, h_below) [+ conv(w_l, h_self_prev)] [+ convT(w_t,
/// h_above_prev)] + b, with terms included per `mode`. Absent recurrent
/// inputs (time step 0) contribute exactly zero. Requiring a term whose
/// kernel was never allocated is a configuration error.
Tensor preactivation(Tape* tape, const RclLayer& layer, const Tensor& h_below,
                     const Tensor* h_self_prev, const Tensor* h_above_prev, WiringMode mode);

/// z_now + z_prev_accum, or z_now unchanged when there is no accumulator
/// yet; the value at step t is the prefix sum of all pre-activations.
Tensor ea_accumulate(Tape* tape, const Tensor& z_now, const Tensor* z_prev_accum);

/// conv2d (3x3, same padding) then global average pooling; no nonlinearity.
Tensor readout(Tape* tape, const Tensor& h_top, const ConvParams& out_conv);

/// A full stack: recurrent layers bottom to top plus the readout conv.
struct LayerStack {
    WiringMode mode = WiringMode::B;
    std::vector<RclLayer> layers;
    ConvParams out_conv;
};

/// Unroll the stack for T steps and return the logits of every step.
/// The input is replicated at each step; layers update synchronously,
/// reading stored activations from step tau-1. With `ea` set the readout
/// consumes the accumulated final-layer pre-activation (after ReLU).
std::vector<Tensor> unroll(Tape* tape, const LayerStack& stack, const Tensor& input, int steps,
                           bool ea);

}  // namespace hbnet
