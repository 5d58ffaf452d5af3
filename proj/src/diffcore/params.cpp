#include "qreason/diffcore/params.hpp"

#include <cmath>

namespace qreason::diff {

template <typename T>
Var<T> ParamSet<T>::insert(const std::string& name, Matrix<T> value, int rank) {
  if (contains(name)) throw InvalidInput("ParamSet: duplicate parameter '" + name + "'");
  auto var = Var<T>::leaf(std::move(value));
  params_.push_back(Param<T>{name, rank, var});
  return var;
}

template <typename T>
Var<T> ParamSet<T>::add_uniform(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                                Eigen::Index fan_in, std::mt19937_64& rng, int rank) {
  if (fan_in <= 0) throw InvalidInput("ParamSet: fan_in must be positive");
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix<T> value(rows, cols);
  for (Eigen::Index i = 0; i < value.size(); ++i) value.data()[i] = static_cast<T>(dist(rng));
  return insert(name, std::move(value), rank);
}

template <typename T>
Var<T> ParamSet<T>::add_constant(const std::string& name, Eigen::Index rows, Eigen::Index cols, T fill,
                                 int rank) {
  return insert(name, Matrix<T>::Constant(rows, cols, fill), rank);
}

template <typename T>
const Var<T>& ParamSet<T>::get(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p.var;
  }
  throw InvalidInput("ParamSet: unknown parameter '" + name + "'");
}

template <typename T>
bool ParamSet<T>::contains(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return true;
  }
  return false;
}

template <typename T>
std::size_t ParamSet<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.var.size());
  return n;
}

template <typename T>
void ParamSet<T>::zero_grad() {
  for (auto& p : params_) p.var.zero_grad();
}

template <typename T>
void ParamSet<T>::scale_grad(T factor) {
  for (auto& p : params_) p.var.mutable_grad() *= factor;
}

template <typename T>
typename ParamSet<T>::Snapshot ParamSet<T>::snapshot() const {
  Snapshot snap;
  snap.reserve(params_.size());
  for (const auto& p : params_) snap.push_back(p.var.value());
  return snap;
}

template <typename T>
void ParamSet<T>::restore(const Snapshot& snap) {
  if (snap.size() != params_.size()) throw InvalidInput("ParamSet::restore: snapshot size mismatch");
  for (std::size_t i = 0; i < snap.size(); ++i) {
    auto& v = params_[i].var.mutable_value();
    if (v.rows() != snap[i].rows() || v.cols() != snap[i].cols()) {
      throw InvalidInput("ParamSet::restore: shape mismatch for '" + params_[i].name + "'");
    }
    v = snap[i];
  }
}

template class ParamSet<float>;
template class ParamSet<double>;

}  // namespace qreason::diff
