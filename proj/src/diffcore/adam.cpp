#include "qreason/diffcore/adam.hpp"

#include <cmath>

namespace qreason::diff {

template <typename T>
void adam_step(std::span<Matrix<T>* const> params, std::span<const Matrix<T>* const> grads, AdamState<T>& state) {
  const auto& cfg = state.config;
  if (!(cfg.learning_rate > 0.0)) throw InvalidInput("adam_step: learning rate must be positive");
  if (params.size() != grads.size()) throw InvalidInput("adam_step: parameter and gradient counts differ");
  if (state.first_moment.empty()) {
    for (const auto* p : params) {
      state.first_moment.push_back(Matrix<T>::Zero(p->rows(), p->cols()));
      state.second_moment.push_back(Matrix<T>::Zero(p->rows(), p->cols()));
    }
  }
  if (state.first_moment.size() != params.size()) throw InvalidInput("adam_step: state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = *params[i];
    const auto& g = *grads[i];
    if (g.rows() != p.rows() || g.cols() != p.cols() || state.first_moment[i].rows() != p.rows() ||
        state.first_moment[i].cols() != p.cols()) {
      throw InvalidInput("adam_step: shape mismatch at parameter " + std::to_string(i));
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  const T correction1 = static_cast<T>(1.0 - std::pow(cfg.beta1, t));
  const T correction2 = static_cast<T>(1.0 - std::pow(cfg.beta2, t));
  const T lr = static_cast<T>(cfg.learning_rate);
  const T eps = static_cast<T>(cfg.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    const auto& g = *grads[i];
    m = b1 * m + (T(1) - b1) * g;
    v = b2 * v + (T(1) - b2) * g.cwiseProduct(g);
    auto& p = *params[i];
    p.array() -= lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + eps);
  }
}

template <typename T>
void adam_step(ParamSet<T>& params, AdamState<T>& state) {
  std::vector<Matrix<T>*> values;
  std::vector<const Matrix<T>*> grads;
  for (auto& p : params.entries()) {
    values.push_back(&p.var.mutable_value());
    grads.push_back(&p.var.mutable_grad());
  }
  adam_step<T>(std::span<Matrix<T>* const>(values), std::span<const Matrix<T>* const>(grads), state);
}

template void adam_step(std::span<Matrix<float>* const>, std::span<const Matrix<float>* const>, AdamState<float>&);
template void adam_step(std::span<Matrix<double>* const>, std::span<const Matrix<double>* const>,
                        AdamState<double>&);
template void adam_step(ParamSet<float>&, AdamState<float>&);
template void adam_step(ParamSet<double>&, AdamState<double>&);

}  // namespace qreason::diff
