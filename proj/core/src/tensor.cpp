#include "trseg/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace trseg {

int64_t shape_size(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor shape dimensions must be positive");
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape_in, double fill, bool requires_grad_in)
    : shape(std::move(shape_in)),
      data(static_cast<size_t>(shape_size(shape)), fill),
      requires_grad(requires_grad_in) {}

Tensor Tensor::scalar(double value, bool requires_grad_in) {
  Tensor t({1}, value, requires_grad_in);
  return t;
}

Tensor Tensor::from(std::vector<int> shape_in, std::vector<double> values,
                    bool requires_grad_in) {
  if (shape_size(shape_in) != static_cast<int64_t>(values.size()))
    throw std::invalid_argument("tensor data length does not match shape");
  Tensor t;
  t.shape = std::move(shape_in);
  t.data = std::move(values);
  t.requires_grad = requires_grad_in;
  return t;
}

void Tensor::ensure_grad() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::check_finite(const std::string& what) const {
  for (double v : data) {
    if (!std::isfinite(v))
      throw std::domain_error("non-finite value in tensor: " + what);
  }
}

Tape::NodeId Tape::leaf(Tensor t) {
  if (shape_size(t.shape) != t.size())
    throw std::invalid_argument("tape leaf: data length does not match shape");
  t.check_finite("tape leaf");
  nodes_.push_back(Node{std::move(t), {}, nullptr});
  return static_cast<NodeId>(nodes_.size()) - 1;
}

Tape::NodeId Tape::record(Tensor out, std::vector<NodeId> input_ids,
                          BackwardFn backward_fn) {
  for (NodeId id : input_ids) check_id(id, "record");
  out.check_finite("op output");
  nodes_.push_back(Node{std::move(out), std::move(input_ids), std::move(backward_fn)});
  return static_cast<NodeId>(nodes_.size()) - 1;
}

Tensor& Tape::value(NodeId id) {
  check_id(id, "value");
  return nodes_[static_cast<size_t>(id)].value;
}

const Tensor& Tape::value(NodeId id) const {
  check_id(id, "value");
  return nodes_[static_cast<size_t>(id)].value;
}

std::vector<double>& Tape::grad(NodeId id) {
  check_id(id, "grad");
  nodes_[static_cast<size_t>(id)].value.ensure_grad();
  return nodes_[static_cast<size_t>(id)].value.grad;
}

const std::vector<double>& Tape::grad(NodeId id) const {
  check_id(id, "grad");
  return nodes_[static_cast<size_t>(id)].value.grad;
}

const std::vector<Tape::NodeId>& Tape::inputs(NodeId id) const {
  check_id(id, "inputs");
  return nodes_[static_cast<size_t>(id)].input_ids;
}

void Tape::backward(NodeId root) {
  check_id(root, "backward");
  if (!nodes_[static_cast<size_t>(root)].value.is_scalar())
    throw std::invalid_argument("backward: root must be a scalar");
  if (backward_done_)
    throw std::logic_error("backward: gradients already populated, reset first");
  for (auto& node : nodes_) node.value.grad.assign(node.value.data.size(), 0.0);
  nodes_[static_cast<size_t>(root)].value.grad[0] = 1.0;
  for (NodeId id = root; id >= 0; --id) {
    auto& node = nodes_[static_cast<size_t>(id)];
    if (node.backward_fn) node.backward_fn(*this, id);
  }
  backward_done_ = true;
}

void Tape::reset_gradients() {
  for (auto& node : nodes_) node.value.grad.clear();
  backward_done_ = false;
}

void Tape::check_id(NodeId id, const char* caller) const {
  if (id < 0 || id >= size())
    throw std::out_of_range(std::string(caller) + ": node id not on this tape");
}

}  // namespace trseg
