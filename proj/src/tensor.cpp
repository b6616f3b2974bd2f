#include "hpgan/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "hpgan/error.hpp"

namespace hpgan {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::vector<double>& detail::Node::ensure_grad() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  return grad;
}

Tensor::Tensor(Shape shape, std::vector<double> values) {
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("tensor of shape " + shape_str(shape) + " cannot hold " +
                     std::to_string(values.size()) + " values");
  }
  if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) {
    throw NumericError("tensor of shape " + shape_str(shape) + " built from non-finite values");
  }
  node_ = std::make_shared<detail::Node>();
  node_->shape = std::move(shape);
  node_->value = std::move(values);
}

Tensor Tensor::zeros(Shape shape) { return filled(std::move(shape), 0.0); }

Tensor Tensor::filled(Shape shape, double value) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(Shape{n}, std::move(values));
}

detail::Node& Tensor::checked() const {
  if (!node_) throw GraphError("use of an undefined tensor");
  return *node_;
}

const Shape& Tensor::shape() const { return checked().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return checked().value.size(); }

std::span<const double> Tensor::data() const { return checked().value; }

std::span<double> Tensor::mutable_data() {
  detail::Node& n = checked();
  if (!n.is_leaf()) throw GraphError("mutable_data() on a non-leaf tensor");
  return n.value;
}

double Tensor::item() const {
  const detail::Node& n = checked();
  if (n.value.size() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_str(n.shape));
  }
  return n.value[0];
}

bool Tensor::requires_grad() const { return checked().requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
  detail::Node& n = checked();
  if (!n.is_leaf()) throw GraphError("requires_grad can only be set on leaves");
  n.requires_grad = on;
  return *this;
}

bool Tensor::has_grad() const { return !checked().grad.empty(); }

std::span<const double> Tensor::grad() const { return checked().grad; }

std::span<double> Tensor::mutable_grad() { return checked().grad; }

void Tensor::zero_grad() {
  detail::Node& n = checked();
  n.grad.assign(n.value.size(), 0.0);
}

void Tensor::clear_grad() {
  detail::Node& n = checked();
  n.grad.clear();
  n.grad.shrink_to_fit();
}

Tensor Tensor::detach() const {
  const detail::Node& n = checked();
  return Tensor(n.shape, n.value);
}

const char* Tensor::op_name() const { return checked().op; }

void backward(const Tensor& loss) {
  if (!loss.defined()) throw GraphError("backward on an undefined tensor");
  detail::Node* root = loss.node().get();
  if (root->value.size() != 1) {
    throw GraphError("backward needs a scalar loss, got shape " + shape_str(root->shape));
  }
  if (!root->requires_grad) {
    throw GraphError("backward on a tensor with no recorded history (detached graph)");
  }
  if (root->backward_done) {
    throw GraphError("backward already ran for this loss");
  }

  // Iterative post-order DFS gives a topological order (operands first).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{root, 0}};
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
  // Interior gradients are scratch space; only leaves keep theirs.
  for (detail::Node* n : order) {
    if (!n->is_leaf()) {
      n->grad.clear();
      n->grad.shrink_to_fit();
    }
  }
  root->backward_done = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

}  // namespace hpgan
