#include "trseg/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trseg::ops {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape != b.shape)
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

void require_rank(const Tensor& t, int rank, const char* op) {
  if (static_cast<int>(t.shape.size()) != rank)
    throw std::invalid_argument(std::string(op) + ": wrong tensor rank");
}

}  // namespace

NodeId add(Tape& tape, NodeId a, NodeId b) {
  const Tensor& ta = tape.value(a);
  const Tensor& tb = tape.value(b);
  require_same_shape(ta, tb, "add");
  Tensor out(ta.shape);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = ta.data[i] + tb.data[i];
  out.requires_grad = ta.requires_grad || tb.requires_grad;
  return tape.record(std::move(out), {a, b}, [](Tape& t, NodeId self) {
    const auto& g = t.grad(self);
    auto& ga = t.grad(t.inputs(self)[0]);
    auto& gb = t.grad(t.inputs(self)[1]);
    for (size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] += g[i];
    }
  });
}

NodeId sub(Tape& tape, NodeId a, NodeId b) {
  const Tensor& ta = tape.value(a);
  const Tensor& tb = tape.value(b);
  require_same_shape(ta, tb, "sub");
  Tensor out(ta.shape);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = ta.data[i] - tb.data[i];
  out.requires_grad = ta.requires_grad || tb.requires_grad;
  return tape.record(std::move(out), {a, b}, [](Tape& t, NodeId self) {
    const auto& g = t.grad(self);
    auto& ga = t.grad(t.inputs(self)[0]);
    auto& gb = t.grad(t.inputs(self)[1]);
    for (size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] -= g[i];
    }
  });
}

NodeId mul(Tape& tape, NodeId a, NodeId b) {
  const Tensor& ta = tape.value(a);
  const Tensor& tb = tape.value(b);
  require_same_shape(ta, tb, "mul");
  Tensor out(ta.shape);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = ta.data[i] * tb.data[i];
  out.requires_grad = ta.requires_grad || tb.requires_grad;
  return tape.record(std::move(out), {a, b}, [](Tape& t, NodeId self) {
    const auto& g = t.grad(self);
    const auto& va = t.value(t.inputs(self)[0]).data;
    const auto& vb = t.value(t.inputs(self)[1]).data;
    auto& ga = t.grad(t.inputs(self)[0]);
    auto& gb = t.grad(t.inputs(self)[1]);
    for (size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i] * vb[i];
      gb[i] += g[i] * va[i];
    }
  });
}

NodeId scale(Tape& tape, NodeId a, double factor) {
  const Tensor& ta = tape.value(a);
  Tensor out(ta.shape);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = factor * ta.data[i];
  out.requires_grad = ta.requires_grad;
  return tape.record(std::move(out), {a}, [factor](Tape& t, NodeId self) {
    const auto& g = t.grad(self);
    auto& ga = t.grad(t.inputs(self)[0]);
    for (size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
  });
}

NodeId sum(Tape& tape, NodeId a) {
  const Tensor& ta = tape.value(a);
  double acc = 0.0;
  for (double v : ta.data) acc += v;
  Tensor out = Tensor::scalar(acc);
  out.requires_grad = ta.requires_grad;
  return tape.record(std::move(out), {a}, [](Tape& t, NodeId self) {
    const double g = t.grad(self)[0];
    auto& ga = t.grad(t.inputs(self)[0]);
    for (double& v : ga) v += g;
  });
}

NodeId pick(Tape& tape, NodeId a, int flat_index) {
  const Tensor& ta = tape.value(a);
  if (flat_index < 0 || flat_index >= ta.size())
    throw std::out_of_range("pick: flat index out of range");
  Tensor out = Tensor::scalar(ta.data[static_cast<size_t>(flat_index)]);
  out.requires_grad = ta.requires_grad;
  return tape.record(std::move(out), {a}, [flat_index](Tape& t, NodeId self) {
    const double g = t.grad(self)[0];
    t.grad(t.inputs(self)[0])[static_cast<size_t>(flat_index)] += g;
  });
}

NodeId relu(Tape& tape, NodeId a) {
  const Tensor& ta = tape.value(a);
  Tensor out(ta.shape);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = std::max(0.0, ta.data[i]);
  out.requires_grad = ta.requires_grad;
  return tape.record(std::move(out), {a}, [](Tape& t, NodeId self) {
    const auto& g = t.grad(self);
    const auto& va = t.value(t.inputs(self)[0]).data;
    auto& ga = t.grad(t.inputs(self)[0]);
    for (size_t i = 0; i < g.size(); ++i) {
      if (va[i] > 0.0) ga[i] += g[i];
    }
  });
}

NodeId conv2d(Tape& tape, NodeId input, NodeId kernel, NodeId bias) {
  const Tensor& in = tape.value(input);
  const Tensor& k = tape.value(kernel);
  const Tensor& b = tape.value(bias);
  require_rank(in, 3, "conv2d input");
  require_rank(k, 4, "conv2d kernel");
  require_rank(b, 1, "conv2d bias");
  const int height = in.shape[0], width = in.shape[1], in_ch = in.shape[2];
  const int kh = k.shape[0], kw = k.shape[1];
  if (k.shape[2] != in_ch)
    throw std::invalid_argument("conv2d: kernel input channels do not match image");
  const int out_ch = k.shape[3];
  if (b.shape[0] != out_ch)
    throw std::invalid_argument("conv2d: bias length does not match output channels");
  if (kh % 2 == 0 || kw % 2 == 0)
    throw std::invalid_argument("conv2d: kernel sizes must be odd");
  const int ph = kh / 2, pw = kw / 2;

  Tensor out({height, width, out_ch});
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double* o = &out.data[static_cast<size_t>((y * width + x) * out_ch)];
      for (int co = 0; co < out_ch; ++co) o[co] = b.data[static_cast<size_t>(co)];
      for (int dy = 0; dy < kh; ++dy) {
        const int yy = y + dy - ph;
        if (yy < 0 || yy >= height) continue;
        for (int dx = 0; dx < kw; ++dx) {
          const int xx = x + dx - pw;
          if (xx < 0 || xx >= width) continue;
          const double* ip = &in.data[static_cast<size_t>((yy * width + xx) * in_ch)];
          const double* kp = &k.data[static_cast<size_t>(((dy * kw + dx) * in_ch) * out_ch)];
          for (int ci = 0; ci < in_ch; ++ci) {
            const double v = ip[ci];
            const double* kr = kp + ci * out_ch;
            for (int co = 0; co < out_ch; ++co) o[co] += v * kr[co];
          }
        }
      }
    }
  }
  out.requires_grad = in.requires_grad || k.requires_grad || b.requires_grad;

  return tape.record(std::move(out), {input, kernel, bias}, [=](Tape& t, NodeId self) {
    const auto& g = t.grad(self);
    const auto& inv = t.value(t.inputs(self)[0]).data;
    const auto& kv = t.value(t.inputs(self)[1]).data;
    auto& gin = t.grad(t.inputs(self)[0]);
    auto& gk = t.grad(t.inputs(self)[1]);
    auto& gb = t.grad(t.inputs(self)[2]);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double* go = &g[static_cast<size_t>((y * width + x) * out_ch)];
        for (int co = 0; co < out_ch; ++co) gb[static_cast<size_t>(co)] += go[co];
        for (int dy = 0; dy < kh; ++dy) {
          const int yy = y + dy - ph;
          if (yy < 0 || yy >= height) continue;
          for (int dx = 0; dx < kw; ++dx) {
            const int xx = x + dx - pw;
            if (xx < 0 || xx >= width) continue;
            const size_t in_base = static_cast<size_t>((yy * width + xx) * in_ch);
            const size_t k_base = static_cast<size_t>(((dy * kw + dx) * in_ch) * out_ch);
            for (int ci = 0; ci < in_ch; ++ci) {
              const double v = inv[in_base + static_cast<size_t>(ci)];
              const double* kr = &kv[k_base + static_cast<size_t>(ci * out_ch)];
              double* gkr = &gk[k_base + static_cast<size_t>(ci * out_ch)];
              double acc = 0.0;
              for (int co = 0; co < out_ch; ++co) {
                acc += go[co] * kr[co];
                gkr[co] += go[co] * v;
              }
              gin[in_base + static_cast<size_t>(ci)] += acc;
            }
          }
        }
      }
    }
  });
}

NodeId softmax_channels(Tape& tape, NodeId logits) {
  const Tensor& l = tape.value(logits);
  require_rank(l, 3, "softmax_channels");
  const int pixels = l.shape[0] * l.shape[1];
  const int k = l.shape[2];
  Tensor out(l.shape);
  for (int p = 0; p < pixels; ++p) {
    const double* x = &l.data[static_cast<size_t>(p * k)];
    double* q = &out.data[static_cast<size_t>(p * k)];
    double m = x[0];
    for (int c = 1; c < k; ++c) m = std::max(m, x[c]);
    double z = 0.0;
    for (int c = 0; c < k; ++c) {
      q[c] = std::exp(x[c] - m);
      z += q[c];
    }
    for (int c = 0; c < k; ++c) q[c] /= z;
  }
  out.requires_grad = l.requires_grad;
  return tape.record(std::move(out), {logits}, [pixels, k](Tape& t, NodeId self) {
    const auto& g = t.grad(self);
    const auto& q = t.value(self).data;
    auto& gl = t.grad(t.inputs(self)[0]);
    for (int p = 0; p < pixels; ++p) {
      const size_t base = static_cast<size_t>(p * k);
      double dot = 0.0;
      for (int c = 0; c < k; ++c) dot += g[base + c] * q[base + c];
      for (int c = 0; c < k; ++c) gl[base + c] += q[base + c] * (g[base + c] - dot);
    }
  });
}

NodeId log_softmax_channels(Tape& tape, NodeId logits) {
  const Tensor& l = tape.value(logits);
  require_rank(l, 3, "log_softmax_channels");
  const int pixels = l.shape[0] * l.shape[1];
  const int k = l.shape[2];
  Tensor out(l.shape);
  for (int p = 0; p < pixels; ++p) {
    const double* x = &l.data[static_cast<size_t>(p * k)];
    double* ls = &out.data[static_cast<size_t>(p * k)];
    double m = x[0];
    for (int c = 1; c < k; ++c) m = std::max(m, x[c]);
    double z = 0.0;
    for (int c = 0; c < k; ++c) z += std::exp(x[c] - m);
    const double log_z = std::log(z);
    for (int c = 0; c < k; ++c) ls[c] = x[c] - m - log_z;
  }
  out.requires_grad = l.requires_grad;
  return tape.record(std::move(out), {logits}, [pixels, k](Tape& t, NodeId self) {
    const auto& g = t.grad(self);
    const auto& ls = t.value(self).data;
    auto& gl = t.grad(t.inputs(self)[0]);
    for (int p = 0; p < pixels; ++p) {
      const size_t base = static_cast<size_t>(p * k);
      double gsum = 0.0;
      for (int c = 0; c < k; ++c) gsum += g[base + c];
      for (int c = 0; c < k; ++c)
        gl[base + c] += g[base + c] - std::exp(ls[base + c]) * gsum;
    }
  });
}

}  // namespace trseg::ops
