#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace gesture::ag {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

// One value in the differentiation graph. Leaves have no backward function;
// interior nodes propagate `grad` into their parents' grad buffers.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
  const char* op = "leaf";

  // Parent i's grad buffer, or nullptr when that parent is not differentiable.
  double* parent_grad(std::size_t i) const {
    Node& p = *parents[i];
    return p.requires_grad ? p.grad.data() : nullptr;
  }
  const std::vector<double>& parent_value(std::size_t i) const { return parents[i]->value; }
};

// Shared handle to a graph node. Copies alias the same storage.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t numel() const { return node_->value.size(); }

  std::span<const double> values() const { return node_->value; }
  // Direct writes are for leaves (parameters, inputs); they bypass the graph.
  std::span<double> mutable_values() { return node_->value; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return !node_->backward; }
  bool has_grad() const { return node_->grad.size() == node_->value.size() && !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  // Allocates a zero gradient if none exists.
  std::span<double> mutable_grad();
  void clear_grad() { node_->grad.clear(); }

  // Same values, cut from the graph.
  Tensor detach() const;

  Node& node() const { return *node_; }
  const std::shared_ptr<Node>& handle() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Builds the result node of an operation. The backward function and parent
// links are only kept when some parent is differentiable. Non-finite forward
// values raise an internal error.
Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                   const char* op, std::function<void(Node&)> backward);

// Reverse-mode sweep from a scalar. Interior gradients are recomputed on
// every call; leaf gradients accumulate across calls until cleared.
void backward(const Tensor& loss);

}  // namespace gesture::ag
