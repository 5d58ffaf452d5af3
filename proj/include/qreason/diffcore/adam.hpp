#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qreason/diffcore/params.hpp"

namespace qreason::diff {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  AdamConfig config;
  std::vector<Matrix<T>> first_moment;
  std::vector<Matrix<T>> second_moment;
  std::int64_t step = 0;
};

// Bias-corrected Adam update applied in place. Moments are created lazily on
// the first call and must keep the parameter shapes afterwards.
template <typename T>
void adam_step(std::span<Matrix<T>* const> params, std::span<const Matrix<T>* const> grads, AdamState<T>& state);

// Convenience overload that reads gradients from the parameter nodes.
template <typename T>
void adam_step(ParamSet<T>& params, AdamState<T>& state);

extern template void adam_step(std::span<Matrix<float>* const>, std::span<const Matrix<float>* const>,
                               AdamState<float>&);
extern template void adam_step(std::span<Matrix<double>* const>, std::span<const Matrix<double>* const>,
                               AdamState<double>&);
extern template void adam_step(ParamSet<float>&, AdamState<float>&);
extern template void adam_step(ParamSet<double>&, AdamState<double>&);

}  // namespace qreason::diff
