#include "qreason/diffcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace qreason::diff {

namespace {

template <typename T>
Var<T> make_node(Matrix<T> value, const char* op, std::vector<std::shared_ptr<Node<T>>> parents,
                 std::function<void(Node<T>&)> backprop) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  n->op = op;
  bool needs = false;
  for (const auto& p : parents) needs = needs || p->requires_grad;
  n->requires_grad = needs;
  n->parents = std::move(parents);
  if (needs) {
    n->backprop = std::move(backprop);
  } else {
    // constant subgraph: keep a no-op closure so the node is not mistaken for a leaf
    n->backprop = [](Node<T>&) {};
  }
  return Var<T>(std::move(n));
}

template <typename T>
void check_same_shape(const Var<T>& a, const Var<T>& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidInput(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                       std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                       std::to_string(b.cols()) + ")");
  }
}

template <typename T>
void check_mask(std::span<const std::uint8_t> mask, Eigen::Index expected, const char* op) {
  if (static_cast<Eigen::Index>(mask.size()) != expected) {
    throw InvalidInput(std::string(op) + ": mask length does not match logits");
  }
  if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; })) {
    throw InvalidInput(std::string(op) + ": mask has no active position");
  }
}

inline bool wants(const std::shared_ptr<Node<float>>& p) { return p->requires_grad; }
inline bool wants(const std::shared_ptr<Node<double>>& p) { return p->requires_grad; }

}  // namespace

template <typename T>
Var<T> Ops<T>::matmul(const Var<T>& a, const Var<T>& b) {
  if (a.cols() != b.rows()) throw InvalidInput("matmul: inner dimensions differ");
  Matrix<T> out = a.value() * b.value();
  return make_node<T>(std::move(out), "matmul", {a.ptr(), b.ptr()}, [](Node<T>& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (wants(pa)) pa->grad_buffer().noalias() += self.grad * pb->value.transpose();
    if (wants(pb)) pb->grad_buffer().noalias() += pa->value.transpose() * self.grad;
  });
}

template <typename T>
Var<T> Ops<T>::matmul_nt(const Var<T>& a, const Var<T>& b) {
  if (a.cols() != b.cols()) throw InvalidInput("matmul_nt: inner dimensions differ");
  Matrix<T> out = a.value() * b.value().transpose();
  return make_node<T>(std::move(out), "matmul_nt", {a.ptr(), b.ptr()}, [](Node<T>& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (wants(pa)) pa->grad_buffer().noalias() += self.grad * pb->value;
    if (wants(pb)) pb->grad_buffer().noalias() += self.grad.transpose() * pa->value;
  });
}

template <typename T>
Var<T> Ops<T>::matmul_tn(const Var<T>& a, const Var<T>& b) {
  if (a.rows() != b.rows()) throw InvalidInput("matmul_tn: inner dimensions differ");
  Matrix<T> out = a.value().transpose() * b.value();
  return make_node<T>(std::move(out), "matmul_tn", {a.ptr(), b.ptr()}, [](Node<T>& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (wants(pa)) pa->grad_buffer().noalias() += pb->value * self.grad.transpose();
    if (wants(pb)) pb->grad_buffer().noalias() += pa->value * self.grad;
  });
}

template <typename T>
Var<T> Ops<T>::affine(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  if (x.cols() != w.rows()) throw InvalidInput("affine: input width does not match weight rows");
  if (b.rows() != 1 || b.cols() != w.cols()) throw InvalidInput("affine: bias must be 1 x out");
  Matrix<T> out = x.value() * w.value();
  out.rowwise() += b.value().row(0);
  return make_node<T>(std::move(out), "affine", {x.ptr(), w.ptr(), b.ptr()}, [](Node<T>& self) {
    auto& px = self.parents[0];
    auto& pw = self.parents[1];
    auto& pb = self.parents[2];
    if (wants(px)) px->grad_buffer().noalias() += self.grad * pw->value.transpose();
    if (wants(pw)) pw->grad_buffer().noalias() += px->value.transpose() * self.grad;
    if (wants(pb)) pb->grad_buffer() += self.grad.colwise().sum();
  });
}

template <typename T>
Var<T> Ops<T>::add(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a, b, "add");
  Matrix<T> out = a.value() + b.value();
  return make_node<T>(std::move(out), "add", {a.ptr(), b.ptr()}, [](Node<T>& self) {
    for (auto& p : self.parents) {
      if (wants(p)) p->grad_buffer() += self.grad;
    }
  });
}

template <typename T>
Var<T> Ops<T>::sub(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a, b, "sub");
  Matrix<T> out = a.value() - b.value();
  return make_node<T>(std::move(out), "sub", {a.ptr(), b.ptr()}, [](Node<T>& self) {
    if (wants(self.parents[0])) self.parents[0]->grad_buffer() += self.grad;
    if (wants(self.parents[1])) self.parents[1]->grad_buffer() -= self.grad;
  });
}

template <typename T>
Var<T> Ops<T>::mul(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a, b, "mul");
  Matrix<T> out = a.value().cwiseProduct(b.value());
  return make_node<T>(std::move(out), "mul", {a.ptr(), b.ptr()}, [](Node<T>& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (wants(pa)) pa->grad_buffer() += self.grad.cwiseProduct(pb->value);
    if (wants(pb)) pb->grad_buffer() += self.grad.cwiseProduct(pa->value);
  });
}

template <typename T>
Var<T> Ops<T>::scale_shift(const Var<T>& a, T scale, T shift) {
  Matrix<T> out = (a.value().array() * scale + shift).matrix();
  return make_node<T>(std::move(out), "scale_shift", {a.ptr()}, [scale](Node<T>& self) {
    self.parents[0]->grad_buffer() += self.grad * scale;
  });
}

template <typename T>
Var<T> Ops<T>::tanh(const Var<T>& a) {
  Matrix<T> out = a.value().array().tanh().matrix();
  return make_node<T>(std::move(out), "tanh", {a.ptr()}, [](Node<T>& self) {
    self.parents[0]->grad_buffer().array() +=
        self.grad.array() * (T(1) - self.value.array().square());
  });
}

template <typename T>
Var<T> Ops<T>::relu(const Var<T>& a) {
  Matrix<T> out = a.value().cwiseMax(T(0));
  return make_node<T>(std::move(out), "relu", {a.ptr()}, [](Node<T>& self) {
    auto& p = self.parents[0];
    p->grad_buffer().array() += (p->value.array() > T(0)).template cast<T>() * self.grad.array();
  });
}

template <typename T>
Var<T> Ops<T>::sigmoid(const Var<T>& a) {
  Matrix<T> out = a.value().unaryExpr([](T x) {
    // split by sign so exp never overflows
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
  });
  return make_node<T>(std::move(out), "sigmoid", {a.ptr()}, [](Node<T>& self) {
    self.parents[0]->grad_buffer().array() +=
        self.grad.array() * self.value.array() * (T(1) - self.value.array());
  });
}

template <typename T>
Var<T> Ops<T>::log(const Var<T>& a) {
  const T floor = static_cast<T>(kLogFloor);
  std::uint64_t clamped = 0;
  Matrix<T> out(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const T x = a.value().data()[i];
    if (x < floor) {
      ++clamped;
      out.data()[i] = std::log(floor);
    } else {
      out.data()[i] = std::log(x);
    }
  }
  if (clamped > 0) note_log_clamp(clamped);
  return make_node<T>(std::move(out), "log", {a.ptr()}, [floor](Node<T>& self) {
    auto& p = self.parents[0];
    auto& g = p->grad_buffer();
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const T x = p->value.data()[i];
      if (x >= floor) g.data()[i] += self.grad.data()[i] / x;
    }
  });
}

template <typename T>
Var<T> Ops<T>::cross_entropy(const Var<T>& p, std::span<const T> target) {
  if (static_cast<Eigen::Index>(target.size()) != p.size())
    throw InvalidInput("cross_entropy: target length does not match distribution");
  const T floor = static_cast<T>(kLogFloor);
  std::uint64_t clamped = 0;
  T total = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const T t = target[static_cast<std::size_t>(i)];
    if (t == T(0)) continue;
    const T x = p.value().data()[i];
    if (x < floor) ++clamped;
    total -= t * std::log(x < floor ? floor : x);
  }
  if (clamped > 0) note_log_clamp(clamped);
  Matrix<T> out(1, 1);
  out(0, 0) = total;
  std::vector<T> t(target.begin(), target.end());
  return make_node<T>(std::move(out), "cross_entropy", {p.ptr()}, [floor, t = std::move(t)](Node<T>& self) {
    auto& parent = self.parents[0];
    auto& g = parent->grad_buffer();
    const T up = self.grad(0, 0);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const T ti = t[static_cast<std::size_t>(i)];
      const T x = parent->value.data()[i];
      if (ti != T(0) && x >= floor) g.data()[i] -= up * ti / x;
    }
  });
}

template <typename T>
Var<T> Ops<T>::sum(const Var<T>& a) {
  Matrix<T> out(1, 1);
  out(0, 0) = a.value().sum();
  return make_node<T>(std::move(out), "sum", {a.ptr()}, [](Node<T>& self) {
    self.parents[0]->grad_buffer().array() += self.grad(0, 0);
  });
}

template <typename T>
Var<T> Ops<T>::transpose(const Var<T>& a) {
  Matrix<T> out = a.value().transpose();
  return make_node<T>(std::move(out), "transpose", {a.ptr()}, [](Node<T>& self) {
    self.parents[0]->grad_buffer() += self.grad.transpose();
  });
}

template <typename T>
Var<T> Ops<T>::softmax_masked(const Var<T>& logits, std::span<const std::uint8_t> mask) {
  check_mask<T>(mask, logits.size(), "softmax_masked");
  const T* x = logits.value().data();
  T peak = -std::numeric_limits<T>::infinity();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) peak = std::max(peak, x[i]);
  }
  Matrix<T> out = Matrix<T>::Zero(logits.rows(), logits.cols());
  T total = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) {
      out.data()[i] = std::exp(x[i] - peak);
      total += out.data()[i];
    }
  }
  out /= total;
  Mask keep(mask.begin(), mask.end());
  return make_node<T>(std::move(out), "softmax_masked", {logits.ptr()},
                      [keep = std::move(keep)](Node<T>& self) {
                        const T* y = self.value.data();
                        const T* gy = self.grad.data();
                        T dot = 0;
                        for (std::size_t i = 0; i < keep.size(); ++i) dot += y[i] * gy[i];
                        T* gx = self.parents[0]->grad_buffer().data();
                        for (std::size_t i = 0; i < keep.size(); ++i) {
                          if (keep[i]) gx[i] += y[i] * (gy[i] - dot);
                        }
                      });
}

template <typename T>
Var<T> Ops<T>::softmax_rows_masked(const Var<T>& logits, std::span<const std::uint8_t> key_mask) {
  check_mask<T>(key_mask, logits.cols(), "softmax_rows_masked");
  const bool full = std::all_of(key_mask.begin(), key_mask.end(), [](std::uint8_t m) { return m != 0; });
  Matrix<T> out(logits.rows(), logits.cols());
  if (full) {
    const auto& x = logits.value();
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const T peak = x.row(r).maxCoeff();
      out.row(r) = (x.row(r).array() - peak).exp().matrix();
      out.row(r) /= out.row(r).sum();
    }
  } else {
    out.setZero();
    const auto& x = logits.value();
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      T peak = -std::numeric_limits<T>::infinity();
      for (Eigen::Index c = 0; c < x.cols(); ++c) {
        if (key_mask[c]) peak = std::max(peak, x(r, c));
      }
      T total = 0;
      for (Eigen::Index c = 0; c < x.cols(); ++c) {
        if (key_mask[c]) {
          out(r, c) = std::exp(x(r, c) - peak);
          total += out(r, c);
        }
      }
      out.row(r) /= total;
    }
  }
  return make_node<T>(std::move(out), "softmax_rows_masked", {logits.ptr()}, [](Node<T>& self) {
    // masked entries have y = 0 so their gradient vanishes without an explicit check
    const auto& y = self.value;
    Eigen::Matrix<T, Eigen::Dynamic, 1> dots = y.cwiseProduct(self.grad).rowwise().sum();
    auto& gx = self.parents[0]->grad_buffer();
    gx.array() += y.array() * (self.grad.colwise() - dots).array();
  });
}

template <typename T>
Var<T> Ops<T>::weighted_sum(const Var<T>& h, const Var<T>& p) {
  if (p.cols() != 1 || p.rows() != h.rows()) {
    throw InvalidInput("weighted_sum: attention vector must be rows(h) x 1");
  }
  return matmul_tn(p, h);
}

template <typename T>
Var<T> Ops<T>::mean_rows_masked(const Var<T>& h, std::span<const std::uint8_t> mask) {
  check_mask<T>(mask, h.rows(), "mean_rows_masked");
  Matrix<T> out = Matrix<T>::Zero(1, h.cols());
  Eigen::Index count = 0;
  for (Eigen::Index r = 0; r < h.rows(); ++r) {
    if (mask[r]) {
      out += h.value().row(r);
      ++count;
    }
  }
  out /= static_cast<T>(count);
  Mask keep(mask.begin(), mask.end());
  return make_node<T>(std::move(out), "mean_rows_masked", {h.ptr()},
                      [keep = std::move(keep), count](Node<T>& self) {
                        auto& g = self.parents[0]->grad_buffer();
                        const T inv = T(1) / static_cast<T>(count);
                        for (std::size_t r = 0; r < keep.size(); ++r) {
                          if (keep[r]) g.row(r) += self.grad.row(0) * inv;
                        }
                      });
}

template <typename T>
Var<T> Ops<T>::concat_cols(std::span<const Var<T>> parts) {
  if (parts.empty()) throw InvalidInput("concat_cols: nothing to concatenate");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  std::vector<std::shared_ptr<Node<T>>> parents;
  std::vector<Eigen::Index> offsets;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw InvalidInput("concat_cols: row counts differ");
    offsets.push_back(cols);
    cols += p.cols();
    parents.push_back(p.ptr());
  }
  Matrix<T> out(rows, cols);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    out.middleCols(offsets[i], parts[i].cols()) = parts[i].value();
  }
  return make_node<T>(std::move(out), "concat_cols", std::move(parents),
                      [offsets = std::move(offsets)](Node<T>& self) {
                        for (std::size_t i = 0; i < self.parents.size(); ++i) {
                          auto& p = self.parents[i];
                          if (wants(p)) p->grad_buffer() += self.grad.middleCols(offsets[i], p->value.cols());
                        }
                      });
}

template <typename T>
Var<T> Ops<T>::slice_rows(const Var<T>& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) throw InvalidInput("slice_rows: out of range");
  Matrix<T> out = a.value().middleRows(start, count);
  return make_node<T>(std::move(out), "slice_rows", {a.ptr()}, [start, count](Node<T>& self) {
    self.parents[0]->grad_buffer().middleRows(start, count) += self.grad;
  });
}

template <typename T>
Var<T> Ops<T>::slice_cols(const Var<T>& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw InvalidInput("slice_cols: out of range");
  Matrix<T> out = a.value().middleCols(start, count);
  return make_node<T>(std::move(out), "slice_cols", {a.ptr()}, [start, count](Node<T>& self) {
    self.parents[0]->grad_buffer().middleCols(start, count) += self.grad;
  });
}

template <typename T>
Var<T> Ops<T>::pad_rows(const Var<T>& a, Eigen::Index total_rows) {
  if (total_rows < a.rows()) throw InvalidInput("pad_rows: target shorter than input");
  Matrix<T> out = Matrix<T>::Zero(total_rows, a.cols());
  out.topRows(a.rows()) = a.value();
  return make_node<T>(std::move(out), "pad_rows", {a.ptr()}, [](Node<T>& self) {
    auto& p = self.parents[0];
    p->grad_buffer() += self.grad.topRows(p->value.rows());
  });
}

template <typename T>
Var<T> Ops<T>::bilinear(const Var<T>& left, const Var<T>& w, const Var<T>& right) {
  if (left.rows() != 1 || right.rows() != 1) throw InvalidInput("bilinear: operands must be row vectors");
  if (left.cols() != w.rows() || right.cols() != w.cols()) throw InvalidInput("bilinear: dimension mismatch");
  return matmul_nt(matmul(left, w), right);
}

template <typename T>
Var<T> Ops<T>::layer_norm(const Var<T>& x, const Var<T>& gain, const Var<T>& bias) {
  const Eigen::Index d = x.cols();
  if (gain.rows() != 1 || gain.cols() != d || bias.rows() != 1 || bias.cols() != d) {
    throw InvalidInput("layer_norm: gain and bias must be 1 x d");
  }
  const T eps = static_cast<T>(1e-5);
  Matrix<T> normed(x.rows(), d);
  Eigen::Matrix<T, Eigen::Dynamic, 1> inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const T mu = x.value().row(r).mean();
    const auto centered = (x.value().row(r).array() - mu).eval();
    const T var = centered.square().mean();
    inv_std(r) = T(1) / std::sqrt(var + eps);
    normed.row(r) = (centered * inv_std(r)).matrix();
  }
  Matrix<T> out = normed.array().rowwise() * gain.value().row(0).array();
  out.rowwise() += bias.value().row(0);
  return make_node<T>(
      std::move(out), "layer_norm", {x.ptr(), gain.ptr(), bias.ptr()},
      [normed = std::move(normed), inv_std = std::move(inv_std)](Node<T>& self) {
        auto& px = self.parents[0];
        auto& pg = self.parents[1];
        auto& pb = self.parents[2];
        if (wants(pb)) pb->grad_buffer() += self.grad.colwise().sum();
        if (wants(pg)) pg->grad_buffer() += self.grad.cwiseProduct(normed).colwise().sum();
        if (wants(px)) {
          const Matrix<T> dn = self.grad.array().rowwise() * pg->value.row(0).array();
          const T inv_d = T(1) / static_cast<T>(dn.cols());
          auto& gx = px->grad_buffer();
          for (Eigen::Index r = 0; r < dn.rows(); ++r) {
            const T mean_dn = dn.row(r).sum() * inv_d;
            const T mean_dn_n = dn.row(r).dot(normed.row(r)) * inv_d;
            gx.row(r).array() +=
                inv_std(r) * (dn.row(r).array() - mean_dn - normed.row(r).array() * mean_dn_n);
          }
        }
      });
}

template <typename T>
Var<T> Ops<T>::embedding(const Var<T>& table, std::span<const int> ids) {
  Matrix<T> out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows()) throw InvalidInput("embedding: id out of range");
    out.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
  }
  std::vector<int> rows(ids.begin(), ids.end());
  return make_node<T>(std::move(out), "embedding", {table.ptr()}, [rows = std::move(rows)](Node<T>& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < rows.size(); ++i) g.row(rows[i]) += self.grad.row(static_cast<Eigen::Index>(i));
  });
}

template struct Ops<float>;
template struct Ops<double>;

}  // namespace qreason::diff
