#pragma once

#include <stdexcept>
#include <vector>

#include "trseg/tensor.hpp"

namespace trseg {

// Per-pixel integer label map.
struct HardLabeling {
  int height = 0;
  int width = 0;
  std::vector<int> labels;

  HardLabeling() = default;
  HardLabeling(int h, int w, int fill = 0)
      : height(h), width(w), labels(static_cast<size_t>(h) * w, fill) {}

  int pixels() const { return height * width; }
  int at(int y, int x) const { return labels[static_cast<size_t>(y) * width + x]; }
  int& at(int y, int x) { return labels[static_cast<size_t>(y) * width + x]; }

  bool operator==(const HardLabeling&) const = default;
};

// Partial label map; -1 marks unlabeled pixels. On disk the sentinel is 255.
struct PartialLabeling {
  int height = 0;
  int width = 0;
  std::vector<int> labels;

  PartialLabeling() = default;
  PartialLabeling(int h, int w)
      : height(h), width(w), labels(static_cast<size_t>(h) * w, -1) {}

  int pixels() const { return height * width; }
  int at(int y, int x) const { return labels[static_cast<size_t>(y) * width + x]; }
  int& at(int y, int x) { return labels[static_cast<size_t>(y) * width + x]; }
  bool labeled(int p) const { return labels[static_cast<size_t>(p)] >= 0; }

  int count_labeled() const {
    int n = 0;
    for (int v : labels)
      if (v >= 0) ++n;
    return n;
  }

  bool operator==(const PartialLabeling&) const = default;
};

// Per-pixel categorical distribution over num_classes labels, row-major
// (pixel, class). Plain values, not tape-connected.
struct SoftSegmentation {
  int height = 0;
  int width = 0;
  int num_classes = 0;
  std::vector<double> prob;

  SoftSegmentation() = default;
  SoftSegmentation(int h, int w, int k)
      : height(h), width(w), num_classes(k),
        prob(static_cast<size_t>(h) * w * k, 0.0) {}

  int pixels() const { return height * width; }
  double at(int p, int k) const { return prob[static_cast<size_t>(p) * num_classes + k]; }
  double& at(int p, int k) { return prob[static_cast<size_t>(p) * num_classes + k]; }

  static SoftSegmentation from_tensor(const Tensor& t) {
    if (t.shape.size() != 3)
      throw std::invalid_argument("SoftSegmentation: tensor must be rank 3");
    SoftSegmentation s(t.shape[0], t.shape[1], t.shape[2]);
    s.prob = t.data;
    return s;
  }

  HardLabeling argmax() const {
    HardLabeling out(height, width);
    for (int p = 0; p < pixels(); ++p) {
      int best = 0;
      for (int k = 1; k < num_classes; ++k)
        if (at(p, k) > at(p, best)) best = k;
      out.labels[static_cast<size_t>(p)] = best;
    }
    return out;
  }
};

}  // namespace trseg
