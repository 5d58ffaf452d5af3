#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "qreason/error.hpp"

namespace qreason::diff {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One value in the computation graph. Leaves are parameters or constants;
// interior nodes carry a closure that pushes their gradient to the parents.
template <typename T>
struct Node {
  Matrix<T> value;
  Matrix<T> grad;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;
  const char* op = "leaf";
  bool requires_grad = false;

  bool is_leaf() const { return !backprop; }

  Matrix<T>& grad_buffer() {
    if (grad.rows() != value.rows() || grad.cols() != value.cols()) {
      grad = Matrix<T>::Zero(value.rows(), value.cols());
    }
    return grad;
  }
};

// Handle to a graph node. Copies share the node.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Var constant(Matrix<T> value) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    return Var(std::move(n));
  }

  static Var leaf(Matrix<T> value) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->requires_grad = true;
    n->grad = Matrix<T>::Zero(n->value.rows(), n->value.cols());
    return Var(std::move(n));
  }

  static Var scalar(T v) {
    Matrix<T> m(1, 1);
    m(0, 0) = v;
    return constant(std::move(m));
  }

  bool valid() const { return node_ != nullptr; }
  const Matrix<T>& value() const { return node_->value; }
  Matrix<T>& mutable_value() { return node_->value; }
  const Matrix<T>& grad() const { return node_->grad; }
  Matrix<T>& mutable_grad() { return node_->grad_buffer(); }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  Eigen::Index size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }
  const char* op() const { return node_->op; }
  T item() const {
    if (size() != 1) throw InvalidInput("Var::item on non-scalar");
    return node_->value(0, 0);
  }

  void zero_grad() {
    if (node_->requires_grad) node_->grad_buffer().setZero();
  }

  Node<T>* get() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& ptr() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

// Runs reverse accumulation from a scalar output. Interior gradients are reset
// on each call; leaf gradients accumulate. Returns the leaves reached.
template <typename T>
std::vector<Var<T>> backward(const Var<T>& output);

// Earliest (topologically) node holding a non-finite value, or nullptr.
template <typename T>
const Node<T>* first_nonfinite(const Var<T>& output);

// Counts log evaluations that were clamped at the epsilon floor.
std::uint64_t log_clamp_count();
void reset_log_clamp_count();
void note_log_clamp(std::uint64_t n);

extern template std::vector<Var<float>> backward(const Var<float>&);
extern template std::vector<Var<double>> backward(const Var<double>&);
extern template const Node<float>* first_nonfinite(const Var<float>&);
extern template const Node<double>* first_nonfinite(const Var<double>&);

}  // namespace qreason::diff
