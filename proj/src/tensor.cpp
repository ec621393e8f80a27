#include "hyperrestore/tensor.hpp"

#include <algorithm>
#include <sstream>

namespace hyperrestore {

namespace {
thread_local GradientTape* g_active_tape = nullptr;
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto extent : shape) n *= extent;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::span<float> detail::TensorNode::ensure_grad() {
  if (grad.empty()) grad.assign(value.size(), 0.0f);
  return grad;
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0f); }

Tensor Tensor::full(Shape shape, float value) {
  const auto n = shape_numel(shape);
  return from(std::move(shape), std::vector<float>(n, value));
}

Tensor Tensor::from(Shape shape, std::vector<float> values) {
  if (shape_numel(shape) != values.size()) {
    throw ContractViolation("tensor shape " + shape_to_string(shape) + " does not match " +
                            std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return wrap(std::move(node));
}

Tensor Tensor::leaf(Shape shape, std::vector<float> values) {
  Tensor t = from(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  return t;
}

Tensor Tensor::wrap(std::shared_ptr<detail::TensorNode> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

const Shape& Tensor::shape() const { return node_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= node_->shape.size()) {
    throw ContractViolation("axis " + std::to_string(axis) + " out of range for shape " +
                            shape_to_string(node_->shape));
  }
  return node_->shape[axis];
}

std::size_t Tensor::numel() const { return node_->value.size(); }

std::span<const float> Tensor::data() const { return node_->value; }

std::span<float> Tensor::mutable_data() { return node_->value; }

float Tensor::item() const {
  if (numel() != 1) {
    throw ContractViolation("item() on tensor of shape " + shape_to_string(shape()));
  }
  return node_->value.front();
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::vector<float> Tensor::grad() const {
  if (node_->grad.empty()) return std::vector<float>(numel(), 0.0f);
  return node_->grad;
}

void Tensor::zero_grad() { node_->grad.clear(); }

Tensor Tensor::detach() const { return from(shape(), node_->value); }

void GradientTape::record(const Tensor& output, BackwardFn backward) {
  entries_.push_back(Entry{output.node(), std::move(backward)});
}

void GradientTape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractViolation("backward() needs a scalar loss, got shape " +
                            (loss.defined() ? shape_to_string(loss.shape()) : std::string("<undefined>")));
  }
  auto seed = loss.node()->ensure_grad();
  seed[0] += 1.0f;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->output->grad.empty()) continue;
    it->backward(*it->output);
  }
}

GradientTape* GradientTape::active() { return g_active_tape; }

TapeScope::TapeScope(GradientTape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }

TapeScope::~TapeScope() { g_active_tape = previous_; }

}  // namespace hyperrestore
