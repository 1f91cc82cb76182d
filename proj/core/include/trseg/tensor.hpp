#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace trseg {

// Dense row-major tensor of 64-bit floats. Rank-3 tensors use HWC layout.
// Data must stay finite; NaN/Inf anywhere is a contract violation and is
// rejected when the tensor enters a Tape.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;  // empty until a backward pass allocates it

  Tensor() = default;
  explicit Tensor(std::vector<int> shape_in, double fill = 0.0,
                  bool requires_grad_in = false);

  static Tensor scalar(double value, bool requires_grad_in = false);
  static Tensor from(std::vector<int> shape_in, std::vector<double> values,
                     bool requires_grad_in = false);

  int64_t size() const { return static_cast<int64_t>(data.size()); }
  bool is_scalar() const { return size() == 1; }

  int idx3(int y, int x, int c) const { return (y * shape[1] + x) * shape[2] + c; }
  double at3(int y, int x, int c) const { return data[idx3(y, x, c)]; }
  double& at3(int y, int x, int c) { return data[idx3(y, x, c)]; }

  void ensure_grad();
  void check_finite(const std::string& what) const;
};

int64_t shape_size(const std::vector<int>& shape);

// Reverse-mode tape. Node creation order is a topological order of the
// computation graph, so a backward pass replays recorded rules from the root
// node down to node 0.
class Tape {
 public:
  using NodeId = int;
  using BackwardFn = std::function<void(Tape&, NodeId)>;

  NodeId leaf(Tensor t);
  NodeId record(Tensor out, std::vector<NodeId> input_ids, BackwardFn backward_fn);

  Tensor& value(NodeId id);
  const Tensor& value(NodeId id) const;
  std::vector<double>& grad(NodeId id);
  const std::vector<double>& grad(NodeId id) const;
  const std::vector<NodeId>& inputs(NodeId id) const;
  int size() const { return static_cast<int>(nodes_.size()); }
  bool backward_done() const { return backward_done_; }

  // Populates grad buffers of every node reachable from `root`. The root must
  // be a scalar node of this tape. Calling twice without reset_gradients() is
  // an error.
  void backward(NodeId root);
  void reset_gradients();

 private:
  struct Node {
    Tensor value;
    std::vector<NodeId> input_ids;
    BackwardFn backward_fn;
  };
  std::vector<Node> nodes_;
  bool backward_done_ = false;

  void check_id(NodeId id, const char* caller) const;
};

}  // namespace trseg
