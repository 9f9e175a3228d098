#include "jlm/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace jlm::nn {

GradCheckReport grad_check(const std::function<Tensor()>& fn,
                           std::vector<std::pair<std::string, Tensor>> params,
                           const GradCheckOptions& opt) {
  for (auto& [_, p] : params) p.zero_grad();
  const Tensor f0 = fn();
  backward(f0);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (auto& [_, p] : params) analytic.emplace_back(p.grad().begin(), p.grad().end());

  GradCheckReport report;
  const double resolution = opt.roundoff_factor * std::numeric_limits<double>::epsilon() * std::abs(f0.item()) /
                            (2.0 * opt.step);
  report.floor = std::max(opt.abs_floor, resolution / opt.tolerance);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& [name, p] = params[k];
    auto w = p.mutable_data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double orig = w[i];
      w[i] = orig + opt.step;
      const double fp = fn().item();
      w[i] = orig - opt.step;
      const double fm = fn().item();
      w[i] = orig;
      const double numeric = (fp - fm) / (2.0 * opt.step);
      const double a = analytic[k][i];
      const double abs_err = std::abs(a - numeric);
      const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), report.floor});
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (rel > report.max_rel_error || report.checked == 0) {
        report.max_rel_error = rel;
        report.worst_parameter = name;
        report.worst_index = i;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
      ++report.checked;
    }
    p.zero_grad();
  }
  report.passed = report.max_rel_error < opt.tolerance;
  return report;
}

}  // namespace jlm::nn
