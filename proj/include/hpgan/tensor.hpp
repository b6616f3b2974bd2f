#pragma once

// Dense double-precision tensors with reverse-mode differentiation.
//
// A Tensor is a handle to a node of the computation graph. Copying a Tensor
// copies the handle, not the values; ops always produce new nodes, so the only
// in-place writers are the optimizer and explicit mutable_data() callers.
// When gradient recording is enabled and any operand requires a gradient, the
// result remembers its operands and a backward closure.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hpgan {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty when absent
  bool requires_grad = false;
  bool backward_done = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;  // null on leaves
  const char* op = "leaf";

  bool is_leaf() const { return !backward_fn; }
  std::vector<double>& ensure_grad();
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(Shape shape);
  static Tensor filled(Shape shape, double value);
  static Tensor scalar(double value);
  // Rank-1 tensor holding `values`.
  static Tensor vector(std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  // Writes bypass the graph; only valid on leaves.
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t flat_index) const { return data()[flat_index]; }

  bool requires_grad() const;
  // Marks a leaf as a gradient sink. Throws GraphError on non-leaves.
  Tensor& set_requires_grad(bool on = true);

  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  // Allocates (or resets) an all-zero gradient.
  void zero_grad();
  // Drops the gradient so has_grad() is false again.
  void clear_grad();

  // Same values, no history.
  Tensor detach() const;

  const char* op_name() const;

  // Internal; ops use these to assemble the graph.
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  detail::Node& checked() const;
  std::shared_ptr<detail::Node> node_;
};

// Reverse-mode accumulation from a scalar loss into every reachable leaf that
// requires a gradient. Gradients add onto whatever the leaves already hold.
// Throws GraphError for a non-scalar loss, a loss with no recorded history,
// or a second call on the same loss.
void backward(const Tensor& loss);

bool grad_enabled();

// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace hpgan
