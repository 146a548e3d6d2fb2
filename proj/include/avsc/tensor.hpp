#pragma once

// Define-by-run reverse-mode autodiff over dense row-major f64 tensors.
//
// A Tensor is a cheap shared handle to a graph node. Ops build new nodes that
// keep their parents alive; backward() walks the graph in reverse topological
// order and accumulates gradients into every node that requires them. Leaf
// gradients persist across graphs until zero_grad(), so a batch can be
// accumulated by several backward() calls on per-sample graphs.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace avsc::num {

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);
std::size_t numel_of(const Shape& shape);

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first touched
  bool requires_grad = false;
  bool backward_done = false;
  std::string_view op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into parents' grads.
  std::function<void(Node&)> backward;

  std::span<double> ensure_grad();
};

class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  /// Column vector [n x 1].
  static Tensor column(std::span<const double> values, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t dim(std::size_t axis) const;
  std::size_t ndim() const { return shape().size(); }
  std::size_t numel() const;
  /// Rows/cols of a 2-D tensor.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const;
  double item() const;
  double at(std::size_t r, std::size_t c) const;
  std::vector<double> to_vector() const;

  bool requires_grad() const;
  bool is_leaf() const;
  std::string_view op() const;

  /// Gradient buffer; zeros when nothing has flowed into this tensor yet.
  std::span<const double> grad() const;
  void zero_grad();

  /// Leaf-only mutable access (optimizer updates, checkpoint loads).
  std::span<double> mutable_data();
  std::span<double> mutable_grad();

  /// Fresh leaf sharing no graph history.
  Tensor detach() const;

  const std::shared_ptr<Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<Node> node_;
};

/// Reverse topological order of every grad-requiring node reachable from a
/// root. Each node appears exactly once and after all of its consumers.
class Tape {
 public:
  static Tape record(const Tensor& root);
  const std::vector<Node*>& reverse_order() const { return order_; }
  std::size_t size() const { return order_.size(); }

 private:
  std::vector<Node*> order_;
};

/// Seeds d(loss)/d(loss) = 1 and runs the chain rule. Throws ContractError for
/// a non-scalar loss or a loss that was already back-propagated.
void backward(const Tensor& loss);

/// Builds an op result. `parents` are recorded only when one of them requires
/// a gradient.
Tensor make_result(Shape shape, std::vector<double> data, std::string_view op,
                   std::vector<Tensor> parents, std::function<void(Node&)> backward_fn);

}  // namespace avsc::num
