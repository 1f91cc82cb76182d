#pragma once

#include "trseg/tensor.hpp"

namespace trseg::ops {

using NodeId = Tape::NodeId;

NodeId add(Tape& tape, NodeId a, NodeId b);
NodeId sub(Tape& tape, NodeId a, NodeId b);
NodeId mul(Tape& tape, NodeId a, NodeId b);
NodeId scale(Tape& tape, NodeId a, double factor);
NodeId sum(Tape& tape, NodeId a);
NodeId pick(Tape& tape, NodeId a, int flat_index);
NodeId relu(Tape& tape, NodeId a);

// 2-D convolution over an HWC input with odd kernel sizes and zero padding
// that preserves the spatial size. Kernel shape is [kh, kw, in_ch, out_ch],
// bias shape [out_ch].
NodeId conv2d(Tape& tape, NodeId input, NodeId kernel, NodeId bias);

// Per-pixel softmax / log-softmax over the channel dimension of an [H, W, K]
// tensor, computed in the log domain with max subtraction.
NodeId softmax_channels(Tape& tape, NodeId logits);
NodeId log_softmax_channels(Tape& tape, NodeId logits);

}  // namespace trseg::ops
