#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qreason/diffcore/params.hpp"

namespace qreason::diff {

inline constexpr double kGradcheckFloor = 1e-8;

struct GradcheckResult {
  double max_rel_error = 0.0;
  std::string worst_name;
  Eigen::Index worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

struct GradTarget {
  std::string name;
  Var<double> var;
};

// Compares reverse-mode gradients of a scalar fragment against central
// differences. Relative error is |a - n| / max(|a|, |n|, floor).
// Throws RuntimeFailure naming the first operation that produced a
// non-finite value.
GradcheckResult gradcheck(const std::function<Var<double>()>& fragment, std::vector<GradTarget> targets,
                          double step = 1e-5, double floor = kGradcheckFloor);

GradcheckResult gradcheck(const std::function<Var<double>()>& fragment, ParamSet<double>& params,
                          double step = 1e-5, double floor = kGradcheckFloor);

}  // namespace qreason::diff
