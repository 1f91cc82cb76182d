#include "trseg/nn.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "trseg/ops.hpp"
#include "trseg/rng.hpp"

namespace trseg {

namespace {

constexpr char kCheckpointMagic[] = "TRSEGNET1\n";

void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("checkpoint: truncated header");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

void write_u64(std::ostream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw std::runtime_error("checkpoint: truncated header");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

void write_doubles(std::ostream& out, const std::vector<double>& values) {
  for (double d : values) write_u64(out, std::bit_cast<uint64_t>(d));
}

void read_doubles(std::istream& in, std::vector<double>& values) {
  for (double& d : values) d = std::bit_cast<double>(read_u64(in));
}

void write_named(std::ostream& out, const std::string& name,
                 const std::vector<double>& values) {
  write_u32(out, static_cast<uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_u64(out, values.size());
  write_doubles(out, values);
}

std::string read_name(std::istream& in) {
  const uint32_t len = read_u32(in);
  if (len > 4096) throw std::runtime_error("checkpoint: implausible name length");
  std::string name(len, '\0');
  in.read(name.data(), len);
  if (!in) throw std::runtime_error("checkpoint: truncated name");
  return name;
}

}  // namespace

int64_t ModelParams::param_count() const {
  int64_t n = 0;
  for (const Tensor& t : kernels) n += t.size();
  for (const Tensor& t : biases) n += t.size();
  return n;
}

void ModelParams::zero_grads() {
  for (Tensor& t : kernels) t.grad.assign(t.data.size(), 0.0);
  for (Tensor& t : biases) t.grad.assign(t.data.size(), 0.0);
}

bool ModelParams::has_grads() const {
  for (const Tensor& t : kernels)
    if (t.grad.size() != t.data.size()) return false;
  for (const Tensor& t : biases)
    if (t.grad.size() != t.data.size()) return false;
  return !kernels.empty();
}

ModelParams ModelParams::conv_net(std::vector<ConvLayerSpec> layer_spec, uint64_t seed) {
  if (layer_spec.empty()) throw std::invalid_argument("conv_net: empty layer spec");
  for (size_t i = 1; i < layer_spec.size(); ++i) {
    if (layer_spec[i].in_ch != layer_spec[i - 1].out_ch)
      throw std::invalid_argument("conv_net: channel mismatch between layers");
  }
  ModelParams p;
  p.spec = std::move(layer_spec);
  Rng rng(mix_seed(seed, 0x6e657477ull));
  for (const ConvLayerSpec& l : p.spec) {
    const double stddev = std::sqrt(2.0 / (l.kh * l.kw * l.in_ch));
    Tensor k({l.kh, l.kw, l.in_ch, l.out_ch}, 0.0, true);
    for (double& v : k.data) v = rng.normal(0.0, stddev);
    p.kernels.push_back(std::move(k));
    p.biases.push_back(Tensor({l.out_ch}, 0.0, true));
  }
  return p;
}

ModelParams ModelParams::micro_net(int in_ch, int num_classes, uint64_t seed,
                                   int depth, int channels) {
  if (depth < 1) throw std::invalid_argument("micro_net: depth must be >= 1");
  std::vector<ConvLayerSpec> spec;
  int prev = in_ch;
  for (int i = 0; i < depth; ++i) {
    spec.push_back(ConvLayerSpec{3, 3, prev, channels, true});
    prev = channels;
  }
  spec.push_back(ConvLayerSpec{1, 1, prev, num_classes, false});
  return conv_net(std::move(spec), seed);
}

ModelParams ModelParams::mlp(int in_dim, const std::vector<int>& hidden, int out_dim,
                             uint64_t seed) {
  std::vector<ConvLayerSpec> spec;
  int prev = in_dim;
  for (int h : hidden) {
    spec.push_back(ConvLayerSpec{1, 1, prev, h, true});
    prev = h;
  }
  spec.push_back(ConvLayerSpec{1, 1, prev, out_dim, false});
  return conv_net(std::move(spec), seed);
}

void ModelParams::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open for writing: " + file.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic) - 1);
  write_u32(out, static_cast<uint32_t>(spec.size()));
  for (const ConvLayerSpec& l : spec) {
    write_u32(out, static_cast<uint32_t>(l.kh));
    write_u32(out, static_cast<uint32_t>(l.kw));
    write_u32(out, static_cast<uint32_t>(l.in_ch));
    write_u32(out, static_cast<uint32_t>(l.out_ch));
    write_u32(out, l.relu ? 1u : 0u);
  }
  for (size_t i = 0; i < spec.size(); ++i) {
    const std::string base = "layer" + std::to_string(i);
    write_named(out, base + ".kernel", kernels[i].data);
    write_named(out, base + ".bias", biases[i].data);
  }
  if (!out) throw std::runtime_error("checkpoint: write failed: " + file.string());
}

ModelParams ModelParams::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open: " + file.string());
  char magic[sizeof(kCheckpointMagic) - 1];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw std::runtime_error("checkpoint: bad magic string");
  const uint32_t layers = read_u32(in);
  if (layers == 0 || layers > 1024) throw std::runtime_error("checkpoint: bad layer count");
  ModelParams p;
  for (uint32_t i = 0; i < layers; ++i) {
    ConvLayerSpec l;
    l.kh = static_cast<int>(read_u32(in));
    l.kw = static_cast<int>(read_u32(in));
    l.in_ch = static_cast<int>(read_u32(in));
    l.out_ch = static_cast<int>(read_u32(in));
    l.relu = read_u32(in) != 0;
    p.spec.push_back(l);
  }
  for (uint32_t i = 0; i < layers; ++i) {
    const ConvLayerSpec& l = p.spec[i];
    for (int part = 0; part < 2; ++part) {
      const std::string name = read_name(in);
      const uint64_t count = read_u64(in);
      const bool is_kernel = part == 0;
      const uint64_t expected = is_kernel
          ? static_cast<uint64_t>(l.kh) * l.kw * l.in_ch * l.out_ch
          : static_cast<uint64_t>(l.out_ch);
      if (count != expected)
        throw std::runtime_error("checkpoint: parameter size mismatch for " + name);
      std::vector<double> values(count);
      read_doubles(in, values);
      if (!in) throw std::runtime_error("checkpoint: truncated parameter data");
      if (is_kernel)
        p.kernels.push_back(Tensor::from({l.kh, l.kw, l.in_ch, l.out_ch},
                                         std::move(values), true));
      else
        p.biases.push_back(Tensor::from({l.out_ch}, std::move(values), true));
    }
  }
  return p;
}

AttachedModel attach(Tape& tape, const ModelParams& params, bool requires_grad) {
  AttachedModel m;
  m.params = &params;
  for (size_t i = 0; i < params.kernels.size(); ++i) {
    Tensor k = params.kernels[i];
    k.grad.clear();
    k.requires_grad = requires_grad;
    m.kernel_ids.push_back(tape.leaf(std::move(k)));
    Tensor b = params.biases[i];
    b.grad.clear();
    b.requires_grad = requires_grad;
    m.bias_ids.push_back(tape.leaf(std::move(b)));
  }
  return m;
}

Tape::NodeId forward(Tape& tape, const AttachedModel& model, Tape::NodeId image) {
  const ModelParams& p = *model.params;
  const Tensor& img = tape.value(image);
  if (img.shape.size() != 3 || img.shape[2] != p.input_channels())
    throw std::invalid_argument("forward: image channels do not match model");
  Tape::NodeId cur = image;
  for (int i = 0; i < p.layer_count(); ++i) {
    cur = ops::conv2d(tape, cur, model.kernel_ids[static_cast<size_t>(i)],
                      model.bias_ids[static_cast<size_t>(i)]);
    if (p.spec[static_cast<size_t>(i)].relu) cur = ops::relu(tape, cur);
  }
  return cur;
}

void collect_grads(Tape& tape, const AttachedModel& model, ModelParams& into) {
  if (into.spec != model.params->spec)
    throw std::invalid_argument("collect_grads: model layout mismatch");
  for (size_t i = 0; i < model.kernel_ids.size(); ++i) {
    const auto& gk = tape.grad(model.kernel_ids[i]);
    const auto& gb = tape.grad(model.bias_ids[i]);
    into.kernels[i].ensure_grad();
    into.biases[i].ensure_grad();
    for (size_t j = 0; j < gk.size(); ++j) into.kernels[i].grad[j] += gk[j];
    for (size_t j = 0; j < gb.size(); ++j) into.biases[i].grad[j] += gb[j];
  }
}

Tensor infer_logits(const ModelParams& params, const Tensor& image) {
  Tape tape;
  AttachedModel m = attach(tape, params, /*requires_grad=*/false);
  const Tape::NodeId logits = forward(tape, m, tape.leaf(image));
  return tape.value(logits);
}

}  // namespace trseg
