#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qreason/diffcore/tensor.hpp"

namespace qreason::diff {

using Mask = std::vector<std::uint8_t>;

inline constexpr double kLogFloor = 1e-12;

// Differentiable primitives. Shapes are row-major matrices; vectors are
// either n x 1 (attention distributions) or 1 x d (pooled features).
template <typename T>
struct Ops {
  static Var<T> matmul(const Var<T>& a, const Var<T>& b);     // a b
  static Var<T> matmul_nt(const Var<T>& a, const Var<T>& b);  // a b^T
  static Var<T> matmul_tn(const Var<T>& a, const Var<T>& b);  // a^T b
  // x w + 1 b, b is 1 x out
  static Var<T> affine(const Var<T>& x, const Var<T>& w, const Var<T>& b);
  static Var<T> add(const Var<T>& a, const Var<T>& b);
  static Var<T> sub(const Var<T>& a, const Var<T>& b);
  static Var<T> mul(const Var<T>& a, const Var<T>& b);
  static Var<T> scale_shift(const Var<T>& a, T scale, T shift);
  static Var<T> tanh(const Var<T>& a);
  static Var<T> relu(const Var<T>& a);
  static Var<T> sigmoid(const Var<T>& a);
  static Var<T> log(const Var<T>& a);
  static Var<T> sum(const Var<T>& a);
  // -sum_i t_i log p_i over entries with t_i != 0, log clamped as in log().
  static Var<T> cross_entropy(const Var<T>& p, std::span<const T> target);
  static Var<T> transpose(const Var<T>& a);
  static Var<T> softmax_masked(const Var<T>& logits, std::span<const std::uint8_t> mask);
  static Var<T> softmax_rows_masked(const Var<T>& logits, std::span<const std::uint8_t> key_mask);
  static Var<T> weighted_sum(const Var<T>& h, const Var<T>& p);  // p^T h, 1 x d
  static Var<T> mean_rows_masked(const Var<T>& h, std::span<const std::uint8_t> mask);
  static Var<T> concat_cols(std::span<const Var<T>> parts);
  static Var<T> slice_rows(const Var<T>& a, Eigen::Index start, Eigen::Index count);
  static Var<T> slice_cols(const Var<T>& a, Eigen::Index start, Eigen::Index count);
  static Var<T> pad_rows(const Var<T>& a, Eigen::Index total_rows);
  static Var<T> bilinear(const Var<T>& left, const Var<T>& w, const Var<T>& right);
  static Var<T> layer_norm(const Var<T>& x, const Var<T>& gain, const Var<T>& bias);
  static Var<T> embedding(const Var<T>& table, std::span<const int> ids);
};

extern template struct Ops<float>;
extern template struct Ops<double>;

template <typename T> Var<T> matmul(const Var<T>& a, const Var<T>& b) { return Ops<T>::matmul(a, b); }
template <typename T> Var<T> matmul_nt(const Var<T>& a, const Var<T>& b) { return Ops<T>::matmul_nt(a, b); }
template <typename T> Var<T> matmul_tn(const Var<T>& a, const Var<T>& b) { return Ops<T>::matmul_tn(a, b); }
template <typename T> Var<T> affine(const Var<T>& x, const Var<T>& w, const Var<T>& b) { return Ops<T>::affine(x, w, b); }
template <typename T> Var<T> add(const Var<T>& a, const Var<T>& b) { return Ops<T>::add(a, b); }
template <typename T> Var<T> sub(const Var<T>& a, const Var<T>& b) { return Ops<T>::sub(a, b); }
template <typename T> Var<T> mul(const Var<T>& a, const Var<T>& b) { return Ops<T>::mul(a, b); }
template <typename T> Var<T> scale_shift(const Var<T>& a, T s, T c) { return Ops<T>::scale_shift(a, s, c); }
template <typename T> Var<T> tanh(const Var<T>& a) { return Ops<T>::tanh(a); }
template <typename T> Var<T> relu(const Var<T>& a) { return Ops<T>::relu(a); }
template <typename T> Var<T> sigmoid(const Var<T>& a) { return Ops<T>::sigmoid(a); }
template <typename T> Var<T> cross_entropy(const Var<T>& p, std::span<const T> t) { return Ops<T>::cross_entropy(p, t); }
template <typename T> Var<T> log(const Var<T>& a) { return Ops<T>::log(a); }
template <typename T> Var<T> sum(const Var<T>& a) { return Ops<T>::sum(a); }
template <typename T> Var<T> transpose(const Var<T>& a) { return Ops<T>::transpose(a); }
template <typename T> Var<T> softmax_masked(const Var<T>& x, std::span<const std::uint8_t> mask) { return Ops<T>::softmax_masked(x, mask); }
template <typename T> Var<T> softmax_rows_masked(const Var<T>& x, std::span<const std::uint8_t> mask) { return Ops<T>::softmax_rows_masked(x, mask); }
template <typename T> Var<T> weighted_sum(const Var<T>& h, const Var<T>& p) { return Ops<T>::weighted_sum(h, p); }
template <typename T> Var<T> mean_rows_masked(const Var<T>& h, std::span<const std::uint8_t> mask) { return Ops<T>::mean_rows_masked(h, mask); }
template <typename T> Var<T> concat_cols(std::span<const Var<T>> parts) { return Ops<T>::concat_cols(parts); }
template <typename T> Var<T> concat_cols(std::initializer_list<Var<T>> parts) {
  std::vector<Var<T>> v(parts);
  return Ops<T>::concat_cols(v);
}
template <typename T> Var<T> slice_rows(const Var<T>& a, Eigen::Index s, Eigen::Index n) { return Ops<T>::slice_rows(a, s, n); }
template <typename T> Var<T> slice_cols(const Var<T>& a, Eigen::Index s, Eigen::Index n) { return Ops<T>::slice_cols(a, s, n); }
template <typename T> Var<T> pad_rows(const Var<T>& a, Eigen::Index total) { return Ops<T>::pad_rows(a, total); }
template <typename T> Var<T> bilinear(const Var<T>& l, const Var<T>& w, const Var<T>& r) { return Ops<T>::bilinear(l, w, r); }
template <typename T> Var<T> layer_norm(const Var<T>& x, const Var<T>& g, const Var<T>& b) { return Ops<T>::layer_norm(x, g, b); }
template <typename T> Var<T> embedding(const Var<T>& table, std::span<const int> ids) { return Ops<T>::embedding(table, ids); }

}  // namespace qreason::diff
