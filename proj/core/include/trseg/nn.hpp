#pragma once

#include <filesystem>
#include <vector>

#include "trseg/tensor.hpp"

namespace trseg {

struct ConvLayerSpec {
  int kh = 3;
  int kw = 3;
  int in_ch = 0;
  int out_ch = 0;
  bool relu = true;

  bool operator==(const ConvLayerSpec&) const = default;
};

// Small fully convolutional net: a stack of same-padded conv layers. The
// segmentation configuration is four 3x3/16-channel ReLU layers followed by a
// 1x1 projection to class logits; a stack of 1x1 layers doubles as an MLP for
// vector inputs.
struct ModelParams {
  std::vector<ConvLayerSpec> spec;
  std::vector<Tensor> kernels;
  std::vector<Tensor> biases;

  int layer_count() const { return static_cast<int>(spec.size()); }
  int input_channels() const { return spec.empty() ? 0 : spec.front().in_ch; }
  int output_channels() const { return spec.empty() ? 0 : spec.back().out_ch; }
  int64_t param_count() const;
  void zero_grads();
  bool has_grads() const;

  // He-style scaled normal initialization with an explicit seed.
  static ModelParams conv_net(std::vector<ConvLayerSpec> layer_spec, uint64_t seed);
  static ModelParams micro_net(int in_ch, int num_classes, uint64_t seed,
                               int depth = 4, int channels = 16);
  static ModelParams mlp(int in_dim, const std::vector<int>& hidden, int out_dim,
                         uint64_t seed);

  // Flat binary checkpoint: magic string, layer spec header, then row-major
  // little-endian 64-bit floats per named parameter.
  void save(const std::filesystem::path& file) const;
  static ModelParams load(const std::filesystem::path& file);
};

// Parameter tensors copied onto a tape as differentiable leaves.
struct AttachedModel {
  const ModelParams* params = nullptr;
  std::vector<Tape::NodeId> kernel_ids;
  std::vector<Tape::NodeId> bias_ids;
};

AttachedModel attach(Tape& tape, const ModelParams& params, bool requires_grad = true);
Tape::NodeId forward(Tape& tape, const AttachedModel& model, Tape::NodeId image);

// Accumulates tape gradients of the attached parameter leaves back into the
// grad buffers of `into` (which must share the attached model's layout).
void collect_grads(Tape& tape, const AttachedModel& model, ModelParams& into);

// Convenience inference path: runs the net on a throwaway tape.
Tensor infer_logits(const ModelParams& params, const Tensor& image);

}  // namespace trseg
