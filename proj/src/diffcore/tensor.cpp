#include "qreason/diffcore/tensor.hpp"

#include <atomic>
#include <cmath>
#include <unordered_set>
#include <utility>

namespace qreason::diff {

namespace {

std::atomic<std::uint64_t> g_log_clamps{0};

// Post-order over nodes for which `keep` holds; parents precede children.
template <typename T, typename Pred>
std::vector<Node<T>*> topo_order(Node<T>* root, Pred keep) {
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  if (!keep(root)) return order;
  stack.emplace_back(root, 0);
  seen.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* parent = node->parents[next++].get();
      if (keep(parent) && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

}  // namespace

std::uint64_t log_clamp_count() { return g_log_clamps.load(); }
void reset_log_clamp_count() { g_log_clamps.store(0); }
void note_log_clamp(std::uint64_t n) { g_log_clamps.fetch_add(n); }

template <typename T>
std::vector<Var<T>> backward(const Var<T>& output) {
  if (!output.valid() || output.size() != 1) {
    throw InvalidInput("backward: output must be a scalar node");
  }
  std::vector<Var<T>> leaves;
  Node<T>* root = output.get();
  if (!root->requires_grad) return leaves;

  auto order = topo_order<T>(root, [](Node<T>* n) { return n->requires_grad; });
  for (Node<T>* n : order) {
    if (!n->is_leaf()) n->grad_buffer().setZero();
  }
  root->grad_buffer()(0, 0) += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (!n->is_leaf()) n->backprop(*n);
  }
  // Leaves are identified by walking parents again so the handles share ownership.
  std::unordered_set<Node<T>*> added;
  for (Node<T>* n : order) {
    for (const auto& p : n->parents) {
      if (p->requires_grad && p->is_leaf() && added.insert(p.get()).second) leaves.emplace_back(p);
    }
  }
  if (root->is_leaf()) leaves.push_back(output);
  return leaves;
}

template <typename T>
const Node<T>* first_nonfinite(const Var<T>& output) {
  if (!output.valid()) return nullptr;
  auto order = topo_order<T>(output.get(), [](Node<T>*) { return true; });
  for (Node<T>* n : order) {
    if (!n->value.allFinite()) return n;
  }
  return nullptr;
}

template std::vector<Var<float>> backward(const Var<float>&);
template std::vector<Var<double>> backward(const Var<double>&);
template const Node<float>* first_nonfinite(const Var<float>&);
template const Node<double>* first_nonfinite(const Var<double>&);

}  // namespace qreason::diff
