#include "qreason/diffcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace qreason::diff {

namespace {

Var<double> evaluate(const std::function<Var<double>()>& fragment) {
  Var<double> loss = fragment();
  if (!loss.valid() || loss.size() != 1) throw InvalidInput("gradcheck: fragment must produce a scalar");
  if (!std::isfinite(loss.item())) {
    const Node<double>* bad = first_nonfinite(loss);
    throw RuntimeFailure(std::string("gradcheck: non-finite loss, first produced by '") +
                         (bad != nullptr ? bad->op : "unknown") + "'");
  }
  return loss;
}

}  // namespace

GradcheckResult gradcheck(const std::function<Var<double>()>& fragment, std::vector<GradTarget> targets,
                          double step, double floor) {
  for (auto& t : targets) t.var.zero_grad();
  backward(evaluate(fragment));
  std::vector<Matrix<double>> analytic;
  for (auto& t : targets) analytic.push_back(t.var.mutable_grad());

  GradcheckResult result;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    auto& value = targets[k].var.mutable_value();
    for (Eigen::Index i = 0; i < value.size(); ++i) {
      const double saved = value.data()[i];
      value.data()[i] = saved + step;
      const double up = evaluate(fragment).item();
      value.data()[i] = saved - step;
      const double down = evaluate(fragment).item();
      value.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[k].data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      const double rel = std::abs(a - numeric) / denom;
      ++result.checked;
      if (result.worst_index < 0 || rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_name = targets[k].name;
        result.worst_index = i;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

GradcheckResult gradcheck(const std::function<Var<double>()>& fragment, ParamSet<double>& params, double step,
                          double floor) {
  std::vector<GradTarget> targets;
  for (auto& p : params.entries()) targets.push_back({p.name, p.var});
  return gradcheck(fragment, std::move(targets), step, floor);
}

}  // namespace qreason::diff
