#include "avsc/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "avsc/errors.hpp"

namespace avsc::num {

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

std::size_t numel_of(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::span<double> Node::ensure_grad() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  return grad;
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one axis");
  for (auto d : shape)
    if (d == 0) throw ShapeError("tensor extents must be positive, got " + to_string(shape));
  if (numel_of(shape) != data.size())
    throw ShapeError("shape " + to_string(shape) + " does not match " +
                     std::to_string(data.size()) + " values");
  node_ = std::make_shared<Node>();
  node_->shape = std::move(shape);
  node_->data = std::move(data);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = numel_of(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({1}, {value}, requires_grad);
}

Tensor Tensor::column(std::span<const double> values, bool requires_grad) {
  return Tensor({values.size(), 1}, std::vector<double>(values.begin(), values.end()), requires_grad);
}

const Shape& Tensor::shape() const { return node_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape().size())
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + to_string(shape()));
  return shape()[axis];
}

std::size_t Tensor::numel() const { return node_->data.size(); }

std::size_t Tensor::rows() const {
  if (ndim() != 2) throw ShapeError("expected a 2-D tensor, got " + to_string(shape()));
  return shape()[0];
}

std::size_t Tensor::cols() const {
  if (ndim() != 2) throw ShapeError("expected a 2-D tensor, got " + to_string(shape()));
  return shape()[1];
}

std::span<const double> Tensor::data() const { return node_->data; }

double Tensor::item() const {
  if (numel() != 1) throw ContractError("item() on tensor of shape " + to_string(shape()));
  return node_->data[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return node_->data.at(r * cols() + c);
}

std::vector<double> Tensor::to_vector() const { return node_->data; }

bool Tensor::requires_grad() const { return node_->requires_grad; }
bool Tensor::is_leaf() const { return node_->parents.empty() && !node_->backward; }
std::string_view Tensor::op() const { return node_->op; }

std::span<const double> Tensor::grad() const { return node_->ensure_grad(); }

void Tensor::zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

std::span<double> Tensor::mutable_data() {
  if (!is_leaf()) throw ContractError("mutable_data() on non-leaf tensor (op " + std::string(op()) + ")");
  return node_->data;
}

std::span<double> Tensor::mutable_grad() { return node_->ensure_grad(); }

Tensor Tensor::detach() const { return Tensor(shape(), node_->data, false); }

Tape Tape::record(const Tensor& root) {
  Tape tape;
  if (!root.defined() || !root.requires_grad()) return tape;
  // Iterative post-order DFS; reversing the post-order gives consumers first.
  std::vector<Node*> post;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      post.push_back(node);
      stack.pop_back();
    }
  }
  tape.order_.assign(post.rbegin(), post.rend());
  return tape;
}

void backward(const Tensor& loss) {
  if (!loss.defined()) throw ContractError("backward() on undefined tensor");
  if (loss.numel() != 1)
    throw ContractError("backward() needs a scalar loss, got shape " + to_string(loss.shape()));
  Node& root = *loss.node();
  if (root.backward_done)
    throw ContractError("backward() already ran on this loss; rebuild the graph first");
  root.backward_done = true;
  if (!root.requires_grad) return;

  const Tape tape = Tape::record(loss);
  // Interior gradients belong to this pass only.
  for (Node* n : tape.reverse_order())
    if (n->backward) n->grad.assign(n->data.size(), 0.0);
  root.ensure_grad()[0] += 1.0;
  for (Node* n : tape.reverse_order())
    if (n->backward) n->backward(*n);
}

Tensor make_result(Shape shape, std::vector<double> data, std::string_view op,
                   std::vector<Tensor> parents, std::function<void(Node&)> backward_fn) {
  Tensor out(std::move(shape), std::move(data), false);
  const bool needs = std::any_of(parents.begin(), parents.end(),
                                 [](const Tensor& p) { return p.requires_grad(); });
  Node& n = *out.node();
  n.op = op;
  if (needs) {
    n.requires_grad = true;
    n.parents.reserve(parents.size());
    for (auto& p : parents) n.parents.push_back(p.node());
    n.backward = std::move(backward_fn);
  }
  return out;
}

}  // namespace avsc::num
