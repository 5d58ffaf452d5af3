#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qreason/diffcore/tensor.hpp"

namespace qreason::diff {

// A named trainable tensor. `rank` is what the checkpoint records (1 for
// vectors stored as 1 x n rows, 2 for matrices).
template <typename T>
struct Param {
  std::string name;
  int rank = 2;
  Var<T> var;
};

// Insertion-ordered parameter registry. Iteration order is the checkpoint order
// and the optimizer order.
template <typename T>
class ParamSet {
 public:
  using Snapshot = std::vector<Matrix<T>>;

  // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  Var<T> add_uniform(const std::string& name, Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in,
                     std::mt19937_64& rng, int rank = 2);
  Var<T> add_constant(const std::string& name, Eigen::Index rows, Eigen::Index cols, T fill, int rank = 2);

  const Var<T>& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  const std::vector<Param<T>>& entries() const { return params_; }
  std::vector<Param<T>>& entries() { return params_; }

  void zero_grad();
  void scale_grad(T factor);
  Snapshot snapshot() const;
  void restore(const Snapshot& snap);

 private:
  Var<T> insert(const std::string& name, Matrix<T> value, int rank);
  std::vector<Param<T>> params_;
};

extern template class ParamSet<float>;
extern template class ParamSet<double>;

}  // namespace qreason::diff
