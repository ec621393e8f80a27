#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hyperrestore {

using Shape = std::vector<std::size_t>;

/// Raised when a caller breaks an operation's precondition (bad shape, bad level, ...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

namespace detail {

struct TensorNode {
  Shape shape;
  std::vector<float> value;
  std::vector<float> grad;  // empty until a gradient reaches this node
  bool requires_grad = false;

  std::span<float> ensure_grad();
};

}  // namespace detail

/// Dense float tensor. Image tensors use channels x height x width layout.
///
/// A Tensor is a shared handle: copies alias the same storage. Values are
/// treated as immutable after construction; only gradients accumulate.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, float value);
  static Tensor from(Shape shape, std::vector<float> values);
  /// Trainable leaf: gradients are accumulated into it by backward().
  static Tensor leaf(Shape shape, std::vector<float> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t dim(std::size_t axis) const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;

  std::span<const float> data() const;
  /// Only meant for filling freshly created tensors.
  std::span<float> mutable_data();
  float item() const;

  bool requires_grad() const;
  bool has_grad() const;
  /// Gradient of the last backward() pass; zeros if none reached this tensor.
  std::vector<float> grad() const;
  void zero_grad();

  /// Deep copy of the values with no gradient history.
  Tensor detach() const;

  const std::shared_ptr<detail::TensorNode>& node() const { return node_; }
  static Tensor wrap(std::shared_ptr<detail::TensorNode> node);

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

/// Define-by-run record of differentiable operations.
///
/// Operations executed while a tape is active (see TapeScope) append one
/// entry each, so entries are always in topological order.
class GradientTape {
 public:
  using BackwardFn = std::function<void(const detail::TensorNode& output)>;

  void record(const Tensor& output, BackwardFn backward);
  std::size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

  /// Propagates d(loss)/d(node) to every recorded input. `loss` must hold
  /// exactly one element.
  void backward(const Tensor& loss);

  static GradientTape* active();

 private:
  friend class TapeScope;
  struct Entry {
    std::shared_ptr<detail::TensorNode> output;
    BackwardFn backward;
  };
  std::vector<Entry> entries_;
};

/// Makes `tape` the active tape of the current thread for the scope's lifetime.
class TapeScope {
 public:
  explicit TapeScope(GradientTape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  GradientTape* previous_;
};

}  // namespace hyperrestore
